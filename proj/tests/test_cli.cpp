#include "mckelm/cli.hpp"

#include "temp_dir.hpp"

#include <gtest/gtest.h>

#include <sstream>
#include <string>
#include <vector>

using namespace mckelm;
using mckelm::testing::slurp;
using mckelm::testing::TempDir;

namespace {

struct Result {
  int code;
  std::string out, err;
};

Result run(std::vector<std::string> args) {
  args.insert(args.begin(), "mckelm");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string p(const std::filesystem::path& x) { return x.string(); }

std::size_t count_lines(const std::string& s, const std::string& prefix) {
  std::istringstream in(s);
  std::size_t n = 0;
  for (std::string line; std::getline(in, line);) n += line.rfind(prefix, 0) == 0;
  return n;
}

class Cli : public ::testing::Test {
 protected:
  TempDir dir;
  std::string train, test;

  void SetUp() override {
    train = p(dir / "train.csv");
    test = p(dir / "test.csv");
    const Result r = run({"gen-data", "--n", "400", "--d", "3", "--classes", "2", "--seed", "5", "--out", train,
                          "--test-out", test});
    ASSERT_EQ(r.code, 0) << r.err;
  }
};

}  // namespace

TEST_F(Cli, PartitionSummary) {
  const std::string data = p(dir / "p.csv");
  ASSERT_EQ(run({"gen-data", "--n", "1000", "--out", data}).code, 0);
  const Result r = run({"partition", "--train", data, "--eta", "2", "--out", p(dir / "tree.json")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(count_lines(r.out, "split "), 3u);
  EXPECT_EQ(count_lines(r.out, "leaf "), 4u);
  EXPECT_EQ(count_lines(r.out, "leaf subset=0 size=250"), 1u);
  EXPECT_EQ(count_lines(r.out, "leaf subset=3 size=250"), 1u);
  const auto tree = nlohmann::json::parse(slurp(dir / "tree.json"));
  EXPECT_EQ(tree["leaves"].size(), 4u);

  const Result big = run({"partition", "--train", data, "--eta", "10"});
  EXPECT_EQ(big.code, 1);
  EXPECT_NE(big.err.find("insufficient"), std::string::npos);
}

TEST_F(Cli, TrainPredictEvaluate) {
  const std::string model = p(dir / "m.mckm");
  Result r = run({"train", "--train", train, "--model", model, "--gamma", "10", "--reg-c", "1e-6", "--eta", "1"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(std::filesystem::exists(model + ".train.json"));

  const std::string preds = p(dir / "pred.csv");
  r = run({"predict", "--model", model, "--test", train, "--out", preds, "--votes"});
  ASSERT_EQ(r.code, 0) << r.err;
  const LoadedDataset truth = load_csv(train, false);
  std::istringstream in(slurp(preds));
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "row,label,votes");
  std::size_t row = 0;
  while (std::getline(in, line)) {
    const auto c1 = line.find(','), c2 = line.find(',', c1 + 1);
    const long label = std::stol(line.substr(c1 + 1, c2 - c1 - 1));
    EXPECT_EQ(label, truth.label_map.decode(truth.data.labels[row]));
    const std::string votes = line.substr(c2 + 1);
    EXPECT_FALSE(votes.empty());
    EXPECT_GE(std::count(votes.begin(), votes.end(), ':'), 2);
    ++row;
  }
  EXPECT_EQ(row, truth.data.size());

  const std::string flat = p(dir / "eval.txt"), json = p(dir / "eval.json");
  r = run({"evaluate", "--model", model, "--test", train, "--out", flat, "--json", json});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("accuracy=1\n"), std::string::npos);
  const auto j = nlohmann::json::parse(slurp(json));
  EXPECT_EQ(j["accuracy"].get<double>(), 1.0);
  EXPECT_EQ(j["precision"]["value"].get<double>(), 1.0);
  EXPECT_EQ(j["recall"]["value"].get<double>(), 1.0);
  EXPECT_EQ(j["f1"]["value"].get<double>(), 1.0);
  EXPECT_TRUE(j.contains("train_seconds"));
  EXPECT_TRUE(j.contains("test_seconds"));
}

TEST_F(Cli, EvaluateReportsShareFieldOrder) {
  auto keys = [](const std::string& flat) {
    std::vector<std::string> k;
    std::istringstream in(flat);
    for (std::string line; std::getline(in, line);) k.push_back(line.substr(0, line.find('=')));
    return k;
  };
  const Result a = run({"evaluate", "--train", train, "--test", test, "--classifier", "gnb"});
  const Result b = run({"evaluate", "--train", train, "--test", test, "--classifier", "knn"});
  ASSERT_EQ(a.code, 0) << a.err;
  ASSERT_EQ(b.code, 0) << b.err;
  EXPECT_EQ(keys(a.out), keys(b.out));
  EXPECT_EQ(keys(a.out)[0], "model");
  EXPECT_EQ(run({"evaluate", "--test", test}).code, 1);
}

TEST_F(Cli, TrainIsByteIdenticalAcrossRuns) {
  for (const char* kind : {"mckelm", "elm", "rkelm"}) {
    const std::string a = p(dir / "a.mckm"), b = p(dir / "b.mckm");
    ASSERT_EQ(run({"train", "--train", train, "--model", a, "--classifier", kind, "--seed", "9"}).code, 0);
    ASSERT_EQ(run({"train", "--train", train, "--model", b, "--classifier", kind, "--seed", "9", "--threads", "3"}).code, 0);
    EXPECT_EQ(slurp(a), slurp(b)) << kind;
  }
}

TEST_F(Cli, ExitCodes) {
  const std::string model = p(dir / "m.mckm");
  EXPECT_EQ(run({"train", "--train", p(dir / "missing.csv"), "--model", model}).code, 2);
  EXPECT_FALSE(std::filesystem::exists(model));
  EXPECT_EQ(run({"train", "--train", train, "--model", model, "--reg-c", "-1"}).code, 1);
  EXPECT_EQ(run({"train", "--train", train, "--model", model, "--kernel", "poly"}).code, 1);
  EXPECT_EQ(run({"train", "--train", train, "--model", model, "--eta", "12"}).code, 1);
  EXPECT_EQ(run({"train", "--train", train, "--model", model, "--route-k", "0"}).code, 1);
  EXPECT_FALSE(std::filesystem::exists(model));
  EXPECT_EQ(run({}).code, 1);
  EXPECT_EQ(run({"frobnicate"}).code, 1);
  EXPECT_EQ(run({"--help"}).code, 0);

  ASSERT_EQ(run({"train", "--train", train, "--model", model}).code, 0);
  const std::string wrong = p(dir / "wrong.csv");
  dir.write("wrong.csv", "1,2\n3,4\n");
  const Result r = run({"predict", "--model", model, "--test", wrong, "--out", p(dir / "x.csv")});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("shape error"), std::string::npos);
  EXPECT_FALSE(std::filesystem::exists(dir / "x.csv"));
  EXPECT_EQ(run({"predict", "--model", model, "--test", test, "--out", p(dir / "nodir" / "x.csv")}).code, 2);

  dir.write("ragged.csv", "1,2,3,0\n1,2,0\n");
  const Result rag = run({"train", "--train", p(dir / "ragged.csv"), "--model", model});
  EXPECT_EQ(rag.code, 1);
  EXPECT_NE(rag.err.find("ragged row 2"), std::string::npos);
}

TEST_F(Cli, UnlabeledQueriesAndVotesGuard) {
  const std::string model = p(dir / "g.mckm");
  ASSERT_EQ(run({"train", "--train", train, "--model", model, "--classifier", "gnb"}).code, 0);
  dir.write("q.csv", "0.1,0.2,0.3\n4,5,6\n");
  const Result r = run({"predict", "--model", model, "--test", p(dir / "q.csv"), "--out", p(dir / "o.csv")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(count_lines(slurp(dir / "o.csv"), ""), 3u);
  EXPECT_EQ(run({"predict", "--model", model, "--test", p(dir / "q.csv"), "--out", p(dir / "o2.csv"), "--votes"}).code, 1);
}

TEST_F(Cli, ConfigFileWithFlagOverride) {
  dir.write("run.ini", "classifier=knn\nknn-k=3\neta=7\n");
  const std::string model = p(dir / "c.mckm");
  Result r = run({"train", "--config", p(dir / "run.ini"), "--train", train, "--model", model, "--eta", "1"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(load_model(model).kind, ModelKind::knn);
  EXPECT_EQ(std::get<KnnModel>(load_model(model).model).k, 3u);
  dir.write("junk.ini", "frobnicate=1\n");
  EXPECT_EQ(run({"train", "--config", p(dir / "junk.ini"), "--train", train, "--model", model}).code, 1);

  dir.write("bad.ini", "reg-c=-4\n");
  EXPECT_EQ(run({"train", "--config", p(dir / "bad.ini"), "--train", train, "--model", model}).code, 1);
  EXPECT_EQ(run({"train", "--config", p(dir / "none.ini"), "--train", train, "--model", model}).code, 2);
}

TEST_F(Cli, SelectFeatures) {
  std::ostringstream csv;
  for (int i = 0; i < 20; ++i) {
    for (int j = 0; j < 1280; ++j) csv << ((j * 37 + i) % 1280) / 1280.0 << ',';
    csv << i % 2 << '\n';
  }
  dir.write("attr.csv", csv.str());
  const std::string out = p(dir / "sel.json");
  Result r = run({"select-features", "--attributions", p(dir / "attr.csv"), "--top-m", "500", "--out", out});
  ASSERT_EQ(r.code, 0) << r.err;
  const FeatureSelection sel = load_selection(out);
  EXPECT_EQ(sel.selected.size(), 500u);
  EXPECT_EQ(std::set<Index>(sel.selected.begin(), sel.selected.end()).size(), 500u);

  r = run({"select-features", "--attributions", p(dir / "attr.csv"), "--top-m", "1280", "--out", out});
  ASSERT_EQ(r.code, 0);
  std::vector<Index> all = load_selection(out).selected;
  std::sort(all.begin(), all.end());
  for (Index i = 0; i < all.size(); ++i) EXPECT_EQ(all[i], i);
  EXPECT_EQ(run({"select-features", "--attributions", p(dir / "attr.csv"), "--top-m", "1281", "--out", out}).code, 1);

  // a selection trained on 1280 columns applies to the 1280-column data
  std::ostringstream data;
  for (int i = 0; i < 40; ++i) {
    for (int j = 0; j < 1280; ++j) data << ((i * 7 + j) % 13) / 13.0 + (i % 2) << ',';
    data << i % 2 << '\n';
  }
  dir.write("wide.csv", data.str());
  ASSERT_EQ(run({"select-features", "--attributions", p(dir / "attr.csv"), "--top-m", "5", "--out", out}).code, 0);
  r = run({"train", "--train", p(dir / "wide.csv"), "--features", out, "--model", p(dir / "w.mckm"), "--eta", "1"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(load_model(p(dir / "w.mckm")).input_dimension(), 1280u);
}

TEST_F(Cli, BenchSweep) {
  const Result r = run({"bench", "--n", "600", "--etas", "0,1,2,3", "--repeats", "1", "--out", p(dir / "b.csv")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(count_lines(r.out, ""), 5u);
  EXPECT_EQ(count_lines(r.out, "eta,subsets,train_seconds,test_seconds,accuracy"), 1u);
  EXPECT_EQ(count_lines(r.out, "3,8,"), 1u);
  EXPECT_EQ(slurp(dir / "b.csv"), r.out);
  EXPECT_EQ(run({"bench", "--n", "600", "--repeats", "0"}).code, 1);
}

TEST_F(Cli, GenDataBinaryAndDeterminism) {
  const std::string a = p(dir / "a.bin"), b = p(dir / "b.bin");
  ASSERT_EQ(run({"gen-data", "--n", "200", "--shape", "rings", "--seed", "7", "--out", a}).code, 0);
  ASSERT_EQ(run({"gen-data", "--n", "200", "--shape", "rings", "--seed", "7", "--out", b}).code, 0);
  EXPECT_EQ(slurp(a), slurp(b));
  EXPECT_EQ(load_binary(a).size(), 200u);
  EXPECT_EQ(run({"gen-data", "--n", "1", "--classes", "2", "--out", a}).code, 1);
}
