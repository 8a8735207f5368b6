#pragma once

#include "mckelm/dataset.hpp"
#include "mckelm/error.hpp"
#include "mckelm/types.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numeric>
#include <string>
#include <vector>

namespace mckelm {

// Per-sample attribution vectors (already pooled to one value per feature),
// each tagged with the class it explains.
struct AttributionTensor {
  Matrix scores;  // n x d
  LabelVector sample_class;

  std::size_t size() const { return sample_class.size(); }
  std::size_t feature_count() const { return static_cast<std::size_t>(scores.cols()); }

  void validate(std::size_t class_count) const {
    if (static_cast<std::size_t>(scores.rows()) != sample_class.size())
      throw Error(ErrorKind::shape, "attribution rows do not match class tags");
    if (!scores.allFinite()) throw Error(ErrorKind::domain, "attribution scores contain NaN or infinite values");
    for (std::size_t i = 0; i < sample_class.size(); ++i)
      if (sample_class[i] >= class_count)
        throw Error(ErrorKind::range, "attribution row " + std::to_string(i) + " has class " +
                                          std::to_string(sample_class[i]) + " >= " + std::to_string(class_count));
  }
};

inline Vector class_mean_scores(const AttributionTensor& attrib, Label class_id) {
  Vector sum = Vector::Zero(attrib.scores.cols());
  std::size_t count = 0;
  for (std::size_t i = 0; i < attrib.size(); ++i) {
    if (attrib.sample_class[i] != class_id) continue;
    sum += attrib.scores.row(static_cast<Eigen::Index>(i)).transpose();
    ++count;
  }
  if (count == 0) throw Error(ErrorKind::empty, "class " + std::to_string(class_id) + " has no attribution samples");
  return sum / static_cast<double>(count);
}

// Mean of the per-class mean vectors: every class weighs the same regardless
// of how many samples it has.
inline Vector overall_scores(const AttributionTensor& attrib, std::size_t class_count) {
  if (class_count == 0) throw Error(ErrorKind::validation, "class count must be positive");
  attrib.validate(class_count);
  Vector total = Vector::Zero(attrib.scores.cols());
  for (std::size_t k = 0; k < class_count; ++k) total += class_mean_scores(attrib, static_cast<Label>(k));
  return total / static_cast<double>(class_count);
}

struct FeatureSelection {
  std::vector<Index> selected;  // descending score, ties to lower index
  Vector scores;                // aggregated score of every input feature

  std::size_t input_dimension() const { return static_cast<std::size_t>(scores.size()); }
  bool operator==(const FeatureSelection& o) const { return selected == o.selected && scores == o.scores; }
};

// With use_absolute, features are ranked by |score|; the stored scores stay signed.
inline FeatureSelection top_m(const Vector& scores, std::size_t m, bool use_absolute = false) {
  const auto d = static_cast<std::size_t>(scores.size());
  if (m < 1 || m > d)
    throw Error(ErrorKind::range, "cannot select m=" + std::to_string(m) + " of " + std::to_string(d) + " features");
  auto key = [&](Index i) { return use_absolute ? std::abs(scores(static_cast<Eigen::Index>(i))) : scores(static_cast<Eigen::Index>(i)); };
  std::vector<Index> order(d);
  std::iota(order.begin(), order.end(), Index{0});
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(m), order.end(), [&](Index a, Index b) {
    const double ka = key(a), kb = key(b);
    return ka > kb || (ka == kb && a < b);
  });
  order.resize(m);
  return FeatureSelection{std::move(order), scores};
}

// Columns reduced and reordered to the selection order.
inline FeatureMatrix apply_selection(const FeatureSelection& sel, const FeatureMatrix& features) {
  if (static_cast<std::size_t>(features.cols()) != sel.input_dimension()) {
    throw Error(ErrorKind::shape, "selection expects " + std::to_string(sel.input_dimension()) +
                                      " features, data has " + std::to_string(features.cols()));
  }
  FeatureMatrix out(features.rows(), static_cast<Eigen::Index>(sel.selected.size()));
  for (std::size_t j = 0; j < sel.selected.size(); ++j)
    out.col(static_cast<Eigen::Index>(j)) = features.col(static_cast<Eigen::Index>(sel.selected[j]));
  return out;
}

inline Dataset apply_selection(const FeatureSelection& sel, const Dataset& data) {
  return Dataset{apply_selection(sel, data.features), data.labels, data.class_count};
}

// Attribution files: the binary table layout under magic "MCKA", or a CSV of
// d score columns followed by the class column.
inline AttributionTensor load_attributions(const std::filesystem::path& path, std::size_t* class_count = nullptr,
                                           bool csv_header = false) {
  AttributionTensor t;
  const auto ext = path.extension().string();
  std::size_t c = 0;
  if (ext == ".bin" || ext == ".mcka") {
    BinaryTable b = read_binary_table(path, kAttributionMagic);
    t.scores = b.features.cast<double>();
    t.sample_class = std::move(b.labels);
    c = b.class_count;
  } else {
    CsvTable csv = read_csv_table(path, csv_header);
    t.scores = csv.features.cast<double>();
    t.sample_class.reserve(csv.labels.size());
    for (std::size_t i = 0; i < csv.labels.size(); ++i) {
      if (csv.labels[i] < 0) throw Error(ErrorKind::range, "row " + std::to_string(i + 1) + ": negative class index");
      t.sample_class.push_back(static_cast<Label>(csv.labels[i]));
      c = std::max<std::size_t>(c, static_cast<std::size_t>(csv.labels[i]) + 1);
    }
  }
  t.validate(c);
  if (class_count) *class_count = c;
  return t;
}

inline void save_attributions(const AttributionTensor& t, std::size_t class_count, const std::filesystem::path& path) {
  write_binary_table(path, kAttributionMagic, t.scores.cast<float>(), t.sample_class, class_count);
}

// Selection file: JSON with the input dimension, the ordered selected indices
// and the aggregated score of every input feature.
inline std::string selection_to_json(const FeatureSelection& sel) {
  nlohmann::ordered_json j;
  j["format"] = "mckelm-feature-selection";
  j["version"] = 1;
  j["input_dimension"] = sel.input_dimension();
  j["selected"] = sel.selected;
  j["scores"] = std::vector<double>(sel.scores.data(), sel.scores.data() + sel.scores.size());
  return j.dump(1) + "\n";
}

inline FeatureSelection selection_from_json(const std::string& text, const std::string& context) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::parse, context + ": " + e.what());
  }
  try {
    if (j.at("format").get<std::string>() != "mckelm-feature-selection")
      throw Error(ErrorKind::format, context + ": not a feature selection file");
    FeatureSelection sel;
    sel.selected = j.at("selected").get<std::vector<Index>>();
    const auto scores = j.at("scores").get<std::vector<double>>();
    sel.scores = Eigen::Map<const Vector>(scores.data(), static_cast<Eigen::Index>(scores.size()));
    if (j.at("input_dimension").get<std::size_t>() != scores.size())
      throw Error(ErrorKind::format, context + ": input_dimension disagrees with score count");
    std::vector<char> seen(scores.size(), 0);
    for (Index i : sel.selected) {
      if (i >= scores.size() || seen[i]) throw Error(ErrorKind::format, context + ": invalid or duplicate index");
      seen[i] = 1;
    }
    if (sel.selected.empty()) throw Error(ErrorKind::format, context + ": empty selection");
    return sel;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::format, context + ": " + e.what());
  }
}

inline void save_selection(const FeatureSelection& sel, const std::filesystem::path& path) {
  io::write_file_atomic(path, selection_to_json(sel));
}

inline FeatureSelection load_selection(const std::filesystem::path& path) {
  const auto bytes = io::read_file(path);
  return selection_from_json(std::string(bytes.begin(), bytes.end()), "'" + path.string() + "'");
}

}  // namespace mckelm
