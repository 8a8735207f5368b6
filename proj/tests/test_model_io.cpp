#include "mckelm/model_io.hpp"
#include "mckelm/pipeline.hpp"

#include "oracles.hpp"
#include "temp_dir.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace mckelm;
using mckelm::testing::TempDir;

namespace {

const ModelKind kAllKinds[] = {ModelKind::mckelm, ModelKind::kelm, ModelKind::elm,
                               ModelKind::rkelm,  ModelKind::knn,  ModelKind::gnb};

TrainOptions options(ModelKind kind) {
  TrainOptions o;
  o.classifier = kind;
  o.kernel = {KernelKind::rbf, 5.0, 1.0};
  o.eta = 2;
  o.seed = 3;
  o.threads = 2;
  o.knn_k = 3;
  return o;
}

struct Fixture {
  Dataset train = gen_synthetic(300, 4, 3, 1, SyntheticShape::blobs);
  LabelMap labels{{10, -4, 7}};
  FeatureMatrix queries;

  Fixture() {
    std::mt19937_64 rng(2);
    queries = oracle::random_features(100, 4, rng, -6.0f, 6.0f);
  }
};

}  // namespace

TEST(ModelFile, RoundTripPredictionsBitwiseForEveryKind) {
  Fixture fx;
  TempDir dir;
  for (ModelKind kind : kAllKinds) {
    const ModelFile f = train_model(fx.train, fx.labels, options(kind));
    const auto path = dir / (std::string(to_string(kind)) + ".mckm");
    save_model(f, path);
    const ModelFile g = load_model(path);
    EXPECT_EQ(g.kind, kind);
    EXPECT_EQ(g.labels, fx.labels);
    EXPECT_EQ(g.normalizer, f.normalizer);
    EXPECT_EQ(predict_model(g, fx.queries).labels, predict_model(f, fx.queries).labels) << to_string(kind);
    EXPECT_EQ(serialize_model(g), serialize_model(f)) << to_string(kind);
  }
}

TEST(ModelFile, KelmScoresSurviveBitwise) {
  Fixture fx;
  const ModelFile f = train_model(fx.train, fx.labels, options(ModelKind::kelm));
  const ModelFile g = deserialize_model(serialize_model(f), "mem");
  const Matrix q = prepare_queries(f, fx.queries);
  EXPECT_EQ(predict_kelm(std::get<KelmColumn>(g.model), q).scores, predict_kelm(std::get<KelmColumn>(f.model), q).scores);
}

TEST(ModelFile, SelectionAndClampPersist) {
  Fixture fx;
  TrainOptions o = options(ModelKind::mckelm);
  o.kernel.kind = KernelKind::chi_square;
  Vector scores(4);
  scores << 0.1, 0.7, 0.3, 0.9;
  o.selection = top_m(scores, 2);
  const ModelFile f = train_model(fx.train, fx.labels, o);
  EXPECT_TRUE(f.clamp);
  EXPECT_EQ(f.input_dimension(), 4u);
  const ModelFile g = deserialize_model(serialize_model(f), "mem");
  ASSERT_TRUE(g.selection.has_value());
  EXPECT_EQ(*g.selection, *o.selection);
  EXPECT_TRUE(g.clamp);
  EXPECT_EQ(predict_model(g, fx.queries).labels, predict_model(f, fx.queries).labels);
  try {
    predict_model(g, FeatureMatrix::Zero(2, 2));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::shape);
    EXPECT_NE(std::string(e.what()).find("2 features, model expects 4"), std::string::npos);
  }
}

TEST(ModelFile, TrainingTwiceIsByteIdentical) {
  Fixture fx;
  for (ModelKind kind : kAllKinds)
    EXPECT_EQ(serialize_model(train_model(fx.train, fx.labels, options(kind))),
              serialize_model(train_model(fx.train, fx.labels, options(kind))))
        << to_string(kind);
}

TEST(ModelFile, MalformedInputs) {
  Fixture fx;
  const auto bytes = serialize_model(train_model(fx.train, fx.labels, options(ModelKind::gnb)));
  auto kind_of = [](const std::vector<char>& b) {
    try {
      deserialize_model(b, "mem");
    } catch (const Error& e) {
      return e.kind();
    }
    return ErrorKind::io;  // sentinel: no error
  };
  auto bad_magic = bytes;
  bad_magic[0] = 'X';
  EXPECT_EQ(kind_of(bad_magic), ErrorKind::format);
  auto truncated = bytes;
  truncated.resize(bytes.size() - 9);
  EXPECT_EQ(kind_of(truncated), ErrorKind::format);
  auto trailing = bytes;
  trailing.push_back(0);
  EXPECT_EQ(kind_of(trailing), ErrorKind::format);
  auto bad_kind = bytes;
  bad_kind[8] = 42;
  EXPECT_EQ(kind_of(bad_kind), ErrorKind::format);
  EXPECT_EQ(kind_of(std::vector<char>{}), ErrorKind::format);
  EXPECT_EQ(kind_of(bytes), ErrorKind::io);

  TempDir dir;
  try {
    load_model(dir / "missing.mckm");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::io);
  }
}

TEST(Pipeline, OptionValidation) {
  TrainOptions o;
  o.reg_c = 0;
  EXPECT_THROW(o.validate(), Error);
  o = TrainOptions{};
  o.kernel.gamma = -1;
  EXPECT_THROW(o.validate(), Error);
  o.classifier = ModelKind::gnb;  // kernel unused
  EXPECT_NO_THROW(o.validate());
  EXPECT_EQ(parse_model_kind("rkelm"), ModelKind::rkelm);
  EXPECT_THROW(parse_model_kind("svm"), Error);
}
