#pragma once

#include "mckelm/byte_io.hpp"
#include "mckelm/error.hpp"
#include "mckelm/types.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace mckelm {

// Labeled feature rows. Labels are contiguous class indices in [0, class_count).
struct Dataset {
  FeatureMatrix features;
  LabelVector labels;
  std::size_t class_count = 0;

  std::size_t size() const { return labels.size(); }
  std::size_t feature_count() const { return static_cast<std::size_t>(features.cols()); }

  Matrix features_double() const { return features.cast<double>(); }

  // Rows in the given order; class_count is kept.
  Dataset subset(const std::vector<Index>& rows) const {
    Dataset out;
    out.class_count = class_count;
    out.features.resize(static_cast<Eigen::Index>(rows.size()), features.cols());
    out.labels.resize(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
      out.features.row(static_cast<Eigen::Index>(i)) = features.row(static_cast<Eigen::Index>(rows[i]));
      out.labels[i] = labels[rows[i]];
    }
    return out;
  }
};

// Enforces the Dataset invariants; throws on the first violation.
inline void validate(const Dataset& data) {
  if (data.size() == 0) throw Error(ErrorKind::empty, "dataset has no rows");
  if (static_cast<std::size_t>(data.features.rows()) != data.size()) {
    throw Error(ErrorKind::shape, "feature rows (" + std::to_string(data.features.rows()) +
                                      ") != label count (" + std::to_string(data.size()) + ")");
  }
  if (data.features.cols() < 1) throw Error(ErrorKind::shape, "dataset has no feature columns");
  if (data.class_count < 2) throw Error(ErrorKind::validation, "class count must be at least 2");
  if (!data.features.allFinite()) throw Error(ErrorKind::domain, "features contain NaN or infinite values");
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (data.labels[i] >= data.class_count) {
      throw Error(ErrorKind::range, "label " + std::to_string(data.labels[i]) + " at row " + std::to_string(i) +
                                        " is not below class count " + std::to_string(data.class_count));
    }
  }
}

// Original file label for each contiguous class index.
struct LabelMap {
  std::vector<std::int64_t> original;

  static LabelMap identity(std::size_t c) {
    LabelMap m;
    for (std::size_t i = 0; i < c; ++i) m.original.push_back(static_cast<std::int64_t>(i));
    return m;
  }

  // Classes in order of first appearance.
  static LabelMap from_first_appearance(const std::vector<std::int64_t>& raw) {
    LabelMap m;
    std::unordered_map<std::int64_t, Label> seen;
    for (auto v : raw) {
      if (seen.emplace(v, static_cast<Label>(m.original.size())).second) m.original.push_back(v);
    }
    return m;
  }

  std::size_t size() const { return original.size(); }

  LabelVector encode(const std::vector<std::int64_t>& raw) const {
    std::unordered_map<std::int64_t, Label> lookup;
    for (std::size_t i = 0; i < original.size(); ++i) lookup.emplace(original[i], static_cast<Label>(i));
    LabelVector out(raw.size());
    for (std::size_t i = 0; i < raw.size(); ++i) {
      auto it = lookup.find(raw[i]);
      if (it == lookup.end()) {
        throw Error(ErrorKind::range, "label " + std::to_string(raw[i]) + " at row " + std::to_string(i + 1) +
                                          " was not seen in training data");
      }
      out[i] = it->second;
    }
    return out;
  }

  std::int64_t decode(Label l) const {
    if (l >= original.size()) throw Error(ErrorKind::range, "class index " + std::to_string(l) + " has no label");
    return original[l];
  }

  bool operator==(const LabelMap&) const = default;
};

struct LoadedDataset {
  Dataset data;
  LabelMap label_map;
};

// ---------------------------------------------------------------------------
// CSV

// Parsed CSV: float features plus the raw integer label column (if present).
struct CsvTable {
  FeatureMatrix features;
  std::vector<std::int64_t> labels;
  bool has_labels = true;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t pos = line.find(',', start);
    out.push_back(trim(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

inline float parse_float(std::string_view s, std::size_t row, std::size_t col) {
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  float v = 0.0f;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) {
    throw Error(ErrorKind::parse, "row " + std::to_string(row) + ", column " + std::to_string(col) +
                                      ": non-numeric value '" + std::string(s) + "'");
  }
  return v;
}

inline std::int64_t parse_label(std::string_view s, std::size_t row) {
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  std::int64_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) {
    throw Error(ErrorKind::parse, "row " + std::to_string(row) + ": label '" + std::string(s) + "' is not an integer");
  }
  return v;
}

}  // namespace detail

// Reads a CSV of feature columns, optionally followed by an integer label
// column. With expected_features == 0 every row is "d features + label" and d
// is inferred; otherwise a row may carry exactly expected_features values
// (unlabeled) or expected_features + 1 (labeled), uniformly across the file.
// Row numbers in errors are 1-based data-row numbers.
inline CsvTable read_csv_table(const std::filesystem::path& path, bool has_header, std::size_t expected_features = 0) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::io, "cannot open '" + path.string() + "'");
  std::string line;
  if (has_header) std::getline(in, line);

  std::vector<float> values;
  CsvTable table;
  std::size_t width = 0;
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    if (detail::trim(line).empty()) continue;
    ++rows;
    auto fields = detail::split_commas(line);
    if (rows == 1) {
      width = fields.size();
      if (expected_features == 0) {
        if (width < 2) throw Error(ErrorKind::parse, "row 1: need at least one feature and a label column");
      } else if (width != expected_features && width != expected_features + 1) {
        throw Error(ErrorKind::shape, "row 1 has " + std::to_string(width) + " columns, expected " +
                                          std::to_string(expected_features) + " features (+ optional label)");
      }
      table.has_labels = expected_features == 0 || width == expected_features + 1;
    } else if (fields.size() != width) {
      throw Error(ErrorKind::parse, "ragged row " + std::to_string(rows) + ": " + std::to_string(fields.size()) +
                                        " columns, expected " + std::to_string(width));
    }
    const std::size_t d = table.has_labels ? width - 1 : width;
    for (std::size_t j = 0; j < d; ++j) values.push_back(detail::parse_float(fields[j], rows, j + 1));
    if (table.has_labels) table.labels.push_back(detail::parse_label(fields[d], rows));
  }
  if (rows == 0) throw Error(ErrorKind::empty, "'" + path.string() + "' contains no data rows");

  const std::size_t d = table.has_labels ? width - 1 : width;
  table.features = Eigen::Map<FeatureMatrix>(values.data(), static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(d));
  return table;
}

// Loads a labeled CSV, remapping labels to [0, c) in first-appearance order.
inline LoadedDataset load_csv(const std::filesystem::path& path, bool has_header) {
  CsvTable table = read_csv_table(path, has_header);
  LoadedDataset out;
  out.label_map = LabelMap::from_first_appearance(table.labels);
  out.data.features = std::move(table.features);
  out.data.labels = out.label_map.encode(table.labels);
  out.data.class_count = out.label_map.size();
  validate(out.data);
  return out;
}

// Writes features with enough digits to reproduce every float exactly.
inline void save_csv(const Dataset& data, const std::filesystem::path& path, const LabelMap* map = nullptr,
                     bool header = false) {
  std::ostringstream os;
  os << std::setprecision(std::numeric_limits<float>::max_digits10);
  if (header) {
    for (std::size_t j = 0; j < data.feature_count(); ++j) os << 'f' << j << ',';
    os << "label\n";
  }
  for (Eigen::Index i = 0; i < data.features.rows(); ++i) {
    for (Eigen::Index j = 0; j < data.features.cols(); ++j) os << data.features(i, j) << ',';
    const Label l = data.labels[static_cast<std::size_t>(i)];
    if (map) os << map->decode(l); else os << l;
    os << '\n';
  }
  io::write_file_atomic(path, os.str());
}

// ---------------------------------------------------------------------------
// Binary format: magic (4 bytes), version u32, n u64, d u64, c u64,
// n*d float32 row-major, n u32 labels. All little-endian.

inline constexpr std::string_view kDatasetMagic = "MCKD";
inline constexpr std::string_view kAttributionMagic = "MCKA";
inline constexpr std::uint32_t kBinaryVersion = 1;

struct BinaryTable {
  FeatureMatrix features;
  LabelVector labels;
  std::size_t class_count = 0;
};

inline BinaryTable read_binary_table(const std::filesystem::path& path, std::string_view magic) {
  const std::vector<char> bytes = io::read_file(path);
  io::ByteReader in(bytes.data(), bytes.size(), "'" + path.string() + "'");
  if (bytes.size() < 4 || in.get_bytes(4) != magic) {
    throw Error(ErrorKind::format, "'" + path.string() + "': bad magic, expected " + std::string(magic));
  }
  const std::uint32_t version = in.get_u32();
  if (version != kBinaryVersion) {
    throw Error(ErrorKind::format, "'" + path.string() + "': unsupported version " + std::to_string(version));
  }
  const std::uint64_t n = in.get_u64();
  const std::uint64_t d = in.get_u64();
  const std::uint64_t c = in.get_u64();
  if (n == 0) throw Error(ErrorKind::empty, "'" + path.string() + "' declares zero rows");
  if (d == 0) throw Error(ErrorKind::format, "'" + path.string() + "' declares zero features");
  if (d > std::numeric_limits<std::uint64_t>::max() / n) throw Error(ErrorKind::format, "declared n*d overflows");
  in.require(n * d, 4);
  BinaryTable t;
  t.class_count = static_cast<std::size_t>(c);
  t.features.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  for (std::uint64_t i = 0; i < n; ++i)
    for (std::uint64_t j = 0; j < d; ++j) t.features(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = in.get_f32();
  in.require(n, 4);
  t.labels.resize(static_cast<std::size_t>(n));
  for (auto& l : t.labels) l = in.get_u32();
  return t;
}

inline void write_binary_table(const std::filesystem::path& path, std::string_view magic, const FeatureMatrix& features,
                               const LabelVector& labels, std::size_t class_count) {
  io::ByteWriter out;
  out.put_bytes(magic);
  out.put_u32(kBinaryVersion);
  out.put_u64(static_cast<std::uint64_t>(features.rows()));
  out.put_u64(static_cast<std::uint64_t>(features.cols()));
  out.put_u64(class_count);
  for (Eigen::Index i = 0; i < features.rows(); ++i)
    for (Eigen::Index j = 0; j < features.cols(); ++j) out.put_f32(features(i, j));
  for (auto l : labels) out.put_u32(l);
  io::write_file_atomic(path, out.bytes());
}

inline Dataset load_binary(const std::filesystem::path& path) {
  BinaryTable t = read_binary_table(path, kDatasetMagic);
  Dataset d{std::move(t.features), std::move(t.labels), t.class_count};
  validate(d);
  return d;
}

inline void save_binary(const Dataset& data, const std::filesystem::path& path) {
  write_binary_table(path, kDatasetMagic, data.features, data.labels, data.class_count);
}

// Picks the loader by extension: ".bin"/".mckd" are binary, anything else CSV.
inline LoadedDataset load_dataset(const std::filesystem::path& path, bool csv_header = false) {
  const auto ext = path.extension().string();
  if (ext == ".bin" || ext == ".mckd") {
    LoadedDataset out;
    out.data = load_binary(path);
    out.label_map = LabelMap::identity(out.data.class_count);
    return out;
  }
  return load_csv(path, csv_header);
}

// ---------------------------------------------------------------------------
// Min-max normalization to [0, 1].

struct NormalizationSpec {
  std::vector<double> min;
  std::vector<double> max;

  std::size_t dimension() const { return min.size(); }
  bool operator==(const NormalizationSpec&) const = default;
};

inline NormalizationSpec fit_normalizer(const Dataset& train) {
  if (train.size() == 0) throw Error(ErrorKind::empty, "cannot fit a normalizer on zero rows");
  NormalizationSpec spec;
  const auto d = train.features.cols();
  spec.min.resize(static_cast<std::size_t>(d));
  spec.max.resize(static_cast<std::size_t>(d));
  for (Eigen::Index j = 0; j < d; ++j) {
    spec.min[j] = static_cast<double>(train.features.col(j).minCoeff());
    spec.max[j] = static_cast<double>(train.features.col(j).maxCoeff());
  }
  return spec;
}

// (x - min) / (max - min); constant features map to 0. With clamp, results
// are clipped into [0, 1], which the chi-square kernel requires on unseen data.
inline FeatureMatrix apply_normalizer(const NormalizationSpec& spec, const FeatureMatrix& features, bool clamp) {
  if (static_cast<std::size_t>(features.cols()) != spec.dimension()) {
    throw Error(ErrorKind::shape, "normalizer expects " + std::to_string(spec.dimension()) + " features, data has " +
                                      std::to_string(features.cols()));
  }
  FeatureMatrix out(features.rows(), features.cols());
  for (Eigen::Index j = 0; j < features.cols(); ++j) {
    const double lo = spec.min[j];
    const double extent = spec.max[j] - lo;
    for (Eigen::Index i = 0; i < features.rows(); ++i) {
      double v = extent > 0.0 ? (static_cast<double>(features(i, j)) - lo) / extent : 0.0;
      if (clamp) v = std::clamp(v, 0.0, 1.0);
      out(i, j) = static_cast<float>(v);
    }
  }
  return out;
}

inline Dataset apply_normalizer(const NormalizationSpec& spec, const Dataset& data, bool clamp) {
  return Dataset{apply_normalizer(spec, data.features, clamp), data.labels, data.class_count};
}

// ---------------------------------------------------------------------------
// Targets

// One-hot n x c matrix: 1 at the true class, 0 elsewhere.
inline Matrix one_hot(const LabelVector& labels, std::size_t c) {
  Matrix t = Matrix::Zero(static_cast<Eigen::Index>(labels.size()), static_cast<Eigen::Index>(c));
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] >= c) {
      throw Error(ErrorKind::range, "label " + std::to_string(labels[i]) + " at row " + std::to_string(i) +
                                        " is not below class count " + std::to_string(c));
    }
    t(static_cast<Eigen::Index>(i), labels[i]) = 1.0;
  }
  return t;
}

// ---------------------------------------------------------------------------
// Synthetic data

enum class SyntheticShape { blobs, rings };

// blobs: one isotropic Gaussian cluster (unit variance) per class, centers on
// a circle of radius 5 in the first two dimensions with uniform offsets in the
// remaining ones.
// rings: 2c concentric annuli in the first two dimensions at radii 1..2c,
// annulus a belonging to class a mod c, so every class owns an inner and an
// outer ring; extra dimensions carry small Gaussian noise.
// Labels are assigned round-robin, so every class appears once n >= c.
inline Dataset gen_synthetic(std::size_t n, std::size_t d, std::size_t c, std::uint64_t seed, SyntheticShape shape) {
  if (c < 2) throw Error(ErrorKind::validation, "synthetic data needs at least 2 classes");
  if (d < 2) throw Error(ErrorKind::validation, "synthetic data needs at least 2 dimensions");
  if (n < c) throw Error(ErrorKind::range, "synthetic data needs n >= c (n=" + std::to_string(n) + ", c=" + std::to_string(c) + ")");

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  Dataset out;
  out.class_count = c;
  out.features.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  out.labels.resize(n);

  if (shape == SyntheticShape::blobs) {
    constexpr double radius = 5.0;
    Matrix centers(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(d));
    for (std::size_t k = 0; k < c; ++k) {
      const double angle = 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(c);
      centers(k, 0) = radius * std::cos(angle);
      centers(k, 1) = radius * std::sin(angle);
      for (std::size_t j = 2; j < d; ++j) centers(k, j) = radius * (unit(rng) - 0.5);
    }
    for (std::size_t i = 0; i < n; ++i) {
      const Label k = static_cast<Label>(i % c);
      out.labels[i] = k;
      for (std::size_t j = 0; j < d; ++j) out.features(i, j) = static_cast<float>(centers(k, j) + gauss(rng));
    }
  } else {
    constexpr double band = 0.15;
    for (std::size_t i = 0; i < n; ++i) {
      const Label k = static_cast<Label>(i % c);
      out.labels[i] = k;
      const std::size_t a = k + c * ((i / c) % 2);  // alternate inner/outer ring of class k
      const double r = 1.0 + static_cast<double>(a) + band * (2.0 * unit(rng) - 1.0);
      const double angle = 2.0 * std::numbers::pi * unit(rng);
      out.features(i, 0) = static_cast<float>(r * std::cos(angle));
      out.features(i, 1) = static_cast<float>(r * std::sin(angle));
      for (std::size_t j = 2; j < d; ++j) out.features(i, j) = static_cast<float>(0.1 * gauss(rng));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Stratified split

struct Split {
  Dataset train;
  Dataset test;
  std::vector<Index> train_rows;
  std::vector<Index> test_rows;
};

// Per class, round(test_fraction * class size) rows go to the test side after
// a seeded shuffle. Both sides keep ascending original row order.
inline Split train_test_split(const Dataset& data, double test_fraction, std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw Error(ErrorKind::validation, "test fraction must lie strictly between 0 and 1");
  }
  std::vector<std::vector<Index>> by_class(data.class_count);
  for (Index i = 0; i < data.size(); ++i) by_class[data.labels[i]].push_back(i);

  std::mt19937_64 rng(seed);
  std::vector<char> is_test(data.size(), 0);
  for (std::size_t k = 0; k < by_class.size(); ++k) {
    auto& rows = by_class[k];
    if (rows.empty()) continue;
    std::shuffle(rows.begin(), rows.end(), rng);
    const auto take = static_cast<std::size_t>(std::llround(test_fraction * static_cast<double>(rows.size())));
    if (take >= rows.size()) {
      throw Error(ErrorKind::validation, "stratified split leaves class " + std::to_string(k) + " empty in train");
    }
    for (std::size_t t = 0; t < take; ++t) is_test[rows[t]] = 1;
  }
  Split s;
  for (Index i = 0; i < data.size(); ++i) (is_test[i] ? s.test_rows : s.train_rows).push_back(i);
  if (s.test_rows.empty()) throw Error(ErrorKind::validation, "test fraction too small: test split is empty");
  s.train = data.subset(s.train_rows);
  s.test = data.subset(s.test_rows);
  return s;
}

}  // namespace mckelm
