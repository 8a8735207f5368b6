#pragma once

#include "mckelm/baselines.hpp"
#include "mckelm/byte_io.hpp"
#include "mckelm/dataset.hpp"
#include "mckelm/error.hpp"
#include "mckelm/feature_select.hpp"
#include "mckelm/kelm.hpp"
#include "mckelm/mckelm.hpp"
#include "mckelm/partition.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <variant>

namespace mckelm {

enum class ModelKind : std::uint32_t { mckelm = 1, kelm = 2, elm = 3, rkelm = 4, knn = 5, gnb = 6 };

inline const char* to_string(ModelKind k) {
  switch (k) {
    case ModelKind::mckelm: return "mckelm";
    case ModelKind::kelm: return "kelm";
    case ModelKind::elm: return "elm";
    case ModelKind::rkelm: return "rkelm";
    case ModelKind::knn: return "knn";
    case ModelKind::gnb: return "gnb";
  }
  return "unknown";
}

inline ModelKind parse_model_kind(std::string_view s) {
  for (auto k : {ModelKind::mckelm, ModelKind::kelm, ModelKind::elm, ModelKind::rkelm, ModelKind::knn, ModelKind::gnb})
    if (s == to_string(k)) return k;
  throw Error(ErrorKind::validation, "unknown classifier '" + std::string(s) + "'");
}

using AnyModel = std::variant<MckelmModel, KelmColumn, ElmModel, RkelmModel, KnnModel, GnbModel>;

// Everything needed to turn raw query rows into original-label predictions:
// optional feature selection, then min-max normalization, then the model.
struct ModelFile {
  ModelKind kind = ModelKind::mckelm;
  LabelMap labels;
  NormalizationSpec normalizer;
  bool clamp = false;
  std::optional<FeatureSelection> selection;
  AnyModel model;

  std::size_t input_dimension() const {
    return selection ? selection->input_dimension() : normalizer.dimension();
  }
};

inline constexpr std::string_view kModelMagic = "MCKM";
inline constexpr std::uint32_t kModelVersion = 1;

namespace serial {

enum Section : std::uint32_t { labels = 1, normalizer = 2, selection = 3, body = 4 };

using io::ByteReader;
using io::ByteWriter;

inline void put_matrix(ByteWriter& w, const Matrix& m) {
  w.put_u64(static_cast<std::uint64_t>(m.rows()));
  w.put_u64(static_cast<std::uint64_t>(m.cols()));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) w.put_f64(m(i, j));
}

inline Matrix get_matrix(ByteReader& r) {
  const std::uint64_t rows = r.get_u64();
  const std::uint64_t cols = r.get_u64();
  if (cols != 0 && rows > (std::uint64_t{1} << 40) / cols) throw Error(ErrorKind::format, "matrix size overflow");
  r.require(rows * cols, 8);
  Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = r.get_f64();
  return m;
}

inline void put_vector(ByteWriter& w, const Vector& v) {
  w.put_u64(static_cast<std::uint64_t>(v.size()));
  for (Eigen::Index i = 0; i < v.size(); ++i) w.put_f64(v(i));
}

inline Vector get_vector(ByteReader& r) {
  const std::uint64_t n = r.get_u64();
  r.require(n, 8);
  Vector v(static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = r.get_f64();
  return v;
}

inline void put_indices(ByteWriter& w, const std::vector<Index>& v) {
  w.put_u64(v.size());
  for (Index i : v) w.put_u64(i);
}

inline std::vector<Index> get_indices(ByteReader& r) {
  const std::uint64_t n = r.get_u64();
  r.require(n, 8);
  std::vector<Index> v(static_cast<std::size_t>(n));
  for (auto& i : v) i = static_cast<Index>(r.get_u64());
  return v;
}

inline void put_labels(ByteWriter& w, const LabelVector& v) {
  w.put_u64(v.size());
  for (Label l : v) w.put_u32(l);
}

inline LabelVector get_labels(ByteReader& r) {
  const std::uint64_t n = r.get_u64();
  r.require(n, 4);
  LabelVector v(static_cast<std::size_t>(n));
  for (auto& l : v) l = r.get_u32();
  return v;
}

inline void put_kernel(ByteWriter& w, const KernelParams& k) {
  w.put_u32(k.kind == KernelKind::rbf ? 0 : 1);
  w.put_f64(k.gamma);
  w.put_f64(k.sigma);
}

inline KernelParams get_kernel(ByteReader& r) {
  KernelParams k;
  const std::uint32_t kind = r.get_u32();
  if (kind > 1) throw Error(ErrorKind::format, "unknown kernel kind " + std::to_string(kind));
  k.kind = kind == 0 ? KernelKind::rbf : KernelKind::chi_square;
  k.gamma = r.get_f64();
  k.sigma = r.get_f64();
  return k;
}

inline void put_column(ByteWriter& w, const KelmColumn& c) {
  w.put_u64(c.subset_id);
  put_kernel(w, c.config.kernel);
  w.put_f64(c.config.regularization_c);
  put_matrix(w, c.support);
  put_matrix(w, c.beta);
}

inline KelmColumn get_column(ByteReader& r) {
  KelmColumn c;
  c.subset_id = static_cast<std::size_t>(r.get_u64());
  c.config.kernel = get_kernel(r);
  c.config.regularization_c = r.get_f64();
  c.support = get_matrix(r);
  c.beta = get_matrix(r);
  if (c.beta.rows() != c.support.rows()) throw Error(ErrorKind::format, "column beta/support row mismatch");
  return c;
}

inline void put_tree(ByteWriter& w, const PartitionTree& t) {
  w.put_u64(t.eta);
  w.put_u64(t.feature_count);
  w.put_u64(t.row_count);
  w.put_f64(t.root_density);
  for (std::size_t i = 0; i < t.internal_count(); ++i) {
    const PartitionNode& n = t.nodes[i];
    w.put_u64(n.size);
    w.put_u64(n.split_feature);
    w.put_f64(n.split_value);
    w.put_f64(n.chopped_density);
    w.put_f64(n.deviation);
  }
  for (std::size_t s = 0; s < t.leaf_count(); ++s) put_indices(w, t.leaf(s).members);
}

inline PartitionTree get_tree(ByteReader& r) {
  PartitionTree t;
  t.eta = static_cast<std::size_t>(r.get_u64());
  if (t.eta > kMaxEta) throw Error(ErrorKind::format, "tree depth " + std::to_string(t.eta) + " out of range");
  t.feature_count = static_cast<std::size_t>(r.get_u64());
  t.row_count = static_cast<std::size_t>(r.get_u64());
  t.root_density = r.get_f64();
  r.require(t.internal_count(), 40);
  t.nodes.resize(2 * t.leaf_count() - 1);
  for (std::size_t i = 0; i < t.internal_count(); ++i) {
    PartitionNode& n = t.nodes[i];
    n.size = static_cast<std::size_t>(r.get_u64());
    n.split_feature = static_cast<std::size_t>(r.get_u64());
    if (n.split_feature >= t.feature_count) throw Error(ErrorKind::format, "split feature out of range");
    n.split_value = r.get_f64();
    n.chopped_density = r.get_f64();
    n.deviation = r.get_f64();
  }
  std::vector<char> seen(t.row_count, 0);
  for (std::size_t s = 0; s < t.leaf_count(); ++s) {
    PartitionNode& leaf = t.nodes[t.internal_count() + s];
    leaf.members = get_indices(r);
    leaf.size = leaf.members.size();
    for (Index m : leaf.members) {
      if (m >= t.row_count || seen[m]) throw Error(ErrorKind::format, "leaf membership is not a partition");
      seen[m] = 1;
    }
  }
  for (char c : seen)
    if (!c) throw Error(ErrorKind::format, "leaf membership misses rows");
  return t;
}

inline void put_body(ByteWriter& w, const MckelmModel& m) {
  put_tree(w, m.tree);
  w.put_u64(m.route_k);
  w.put_u64(m.class_count);
  w.put_u32(m.vote_mode == VoteMode::majority ? 0 : 1);
  w.put_u64(m.columns.size());
  for (const auto& c : m.columns) put_column(w, c);
}

inline void put_body(ByteWriter& w, const KelmColumn& c) { put_column(w, c); }

inline void put_body(ByteWriter& w, const ElmModel& m) {
  w.put_u64(m.seed);
  put_matrix(w, m.input_weights);
  put_vector(w, m.biases);
  put_matrix(w, m.output_weights);
}

inline void put_body(ByteWriter& w, const RkelmModel& m) {
  w.put_u64(m.seed);
  put_kernel(w, m.kernel);
  put_matrix(w, m.mapping_nodes);
  put_matrix(w, m.output_weights);
}

inline void put_body(ByteWriter& w, const KnnModel& m) {
  put_tree(w, m.tree);
  put_matrix(w, m.points.cast<double>());
  put_labels(w, m.labels);
  w.put_u64(m.class_count);
  w.put_u64(m.k);
}

inline void put_body(ByteWriter& w, const GnbModel& m) {
  put_matrix(w, m.means);
  put_matrix(w, m.variances);
  put_vector(w, m.priors);
}

inline AnyModel get_body(ByteReader& r, ModelKind kind) {
  switch (kind) {
    case ModelKind::mckelm: {
      MckelmModel m;
      m.tree = get_tree(r);
      m.route_k = static_cast<std::size_t>(r.get_u64());
      m.class_count = static_cast<std::size_t>(r.get_u64());
      const std::uint32_t mode = r.get_u32();
      if (mode > 1) throw Error(ErrorKind::format, "unknown vote mode");
      m.vote_mode = mode == 0 ? VoteMode::majority : VoteMode::score_average;
      const std::uint64_t n = r.get_u64();
      if (n != m.tree.leaf_count()) throw Error(ErrorKind::format, "column count does not match tree leaves");
      for (std::uint64_t i = 0; i < n; ++i) m.columns.push_back(get_column(r));
      m.routing_points = gather_routing_points(m.tree, m.columns);
      m.validate();
      return m;
    }
    case ModelKind::kelm: return get_column(r);
    case ModelKind::elm: {
      ElmModel m;
      m.seed = r.get_u64();
      m.input_weights = get_matrix(r);
      m.biases = get_vector(r);
      m.output_weights = get_matrix(r);
      return m;
    }
    case ModelKind::rkelm: {
      RkelmModel m;
      m.seed = r.get_u64();
      m.kernel = get_kernel(r);
      m.mapping_nodes = get_matrix(r);
      m.output_weights = get_matrix(r);
      return m;
    }
    case ModelKind::knn: {
      KnnModel m;
      m.tree = get_tree(r);
      m.points = get_matrix(r).cast<float>();
      m.labels = get_labels(r);
      m.class_count = static_cast<std::size_t>(r.get_u64());
      m.k = static_cast<std::size_t>(r.get_u64());
      if (m.labels.size() != static_cast<std::size_t>(m.points.rows()) || m.tree.row_count != m.labels.size())
        throw Error(ErrorKind::format, "k-NN model row counts disagree");
      return m;
    }
    case ModelKind::gnb: {
      GnbModel m;
      m.means = get_matrix(r);
      m.variances = get_matrix(r);
      m.priors = get_vector(r);
      return m;
    }
  }
  throw Error(ErrorKind::format, "unknown model kind");
}

}  // namespace serial

inline std::vector<char> serialize_model(const ModelFile& f) {
  using serial::ByteWriter;
  ByteWriter w;
  w.put_bytes(kModelMagic);
  w.put_u32(kModelVersion);
  w.put_u32(static_cast<std::uint32_t>(f.kind));

  ByteWriter lm;
  lm.put_u64(f.labels.size());
  for (auto v : f.labels.original) lm.put_i64(v);
  w.put_section(serial::labels, lm);

  ByteWriter nm;
  nm.put_u32(f.clamp ? 1 : 0);
  nm.put_u64(f.normalizer.dimension());
  for (double v : f.normalizer.min) nm.put_f64(v);
  for (double v : f.normalizer.max) nm.put_f64(v);
  w.put_section(serial::normalizer, nm);

  ByteWriter sm;
  sm.put_u32(f.selection ? 1 : 0);
  if (f.selection) {
    serial::put_vector(sm, f.selection->scores);
    serial::put_indices(sm, f.selection->selected);
  }
  w.put_section(serial::selection, sm);

  ByteWriter body;
  std::visit([&](const auto& m) { serial::put_body(body, m); }, f.model);
  w.put_section(serial::body, body);
  return w.bytes();
}

inline ModelFile deserialize_model(const std::vector<char>& bytes, const std::string& context) {
  io::ByteReader r(bytes.data(), bytes.size(), context);
  if (bytes.size() < 4 || r.get_bytes(4) != kModelMagic) throw Error(ErrorKind::format, context + ": not a model file");
  const std::uint32_t version = r.get_u32();
  if (version != kModelVersion) throw Error(ErrorKind::format, context + ": unsupported model version " + std::to_string(version));
  ModelFile f;
  const std::uint32_t kind = r.get_u32();
  if (kind < 1 || kind > 6) throw Error(ErrorKind::format, context + ": unknown model kind " + std::to_string(kind));
  f.kind = static_cast<ModelKind>(kind);

  {
    auto s = r.get_section(serial::labels);
    const std::uint64_t n = s.get_u64();
    s.require(n, 8);
    for (std::uint64_t i = 0; i < n; ++i) f.labels.original.push_back(s.get_i64());
  }
  {
    auto s = r.get_section(serial::normalizer);
    f.clamp = s.get_u32() != 0;
    const std::uint64_t d = s.get_u64();
    s.require(2 * d, 8);
    f.normalizer.min.resize(static_cast<std::size_t>(d));
    f.normalizer.max.resize(static_cast<std::size_t>(d));
    for (auto& v : f.normalizer.min) v = s.get_f64();
    for (auto& v : f.normalizer.max) v = s.get_f64();
  }
  {
    auto s = r.get_section(serial::selection);
    if (s.get_u32() != 0) {
      FeatureSelection sel;
      sel.scores = serial::get_vector(s);
      sel.selected = serial::get_indices(s);
      for (Index i : sel.selected)
        if (i >= sel.input_dimension()) throw Error(ErrorKind::format, context + ": selection index out of range");
      if (sel.selected.size() != f.normalizer.dimension())
        throw Error(ErrorKind::format, context + ": selection size disagrees with normalizer");
      f.selection = std::move(sel);
    }
  }
  {
    auto s = r.get_section(serial::body);
    f.model = serial::get_body(s, f.kind);
    if (!s.at_end()) throw Error(ErrorKind::format, context + ": trailing bytes in model body");
  }
  if (!r.at_end()) throw Error(ErrorKind::format, context + ": trailing bytes after model");
  return f;
}

inline void save_model(const ModelFile& f, const std::filesystem::path& path) {
  io::write_file_atomic(path, serialize_model(f));
}

inline ModelFile load_model(const std::filesystem::path& path) {
  return deserialize_model(io::read_file(path), "'" + path.string() + "'");
}

}  // namespace mckelm
