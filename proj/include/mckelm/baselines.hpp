#pragma once

#include "mckelm/dataset.hpp"
#include "mckelm/error.hpp"
#include "mckelm/kelm.hpp"
#include "mckelm/kernels.hpp"
#include "mckelm/partition.hpp"
#include "mckelm/types.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <numeric>
#include <random>
#include <string>
#include <vector>

namespace mckelm {

// ---------------------------------------------------------------------------
// ELM: random sigmoid hidden layer, ridge-solved output weights.

struct ElmModel {
  Matrix input_weights;  // L x d
  Vector biases;         // L
  Matrix output_weights; // L x c
  std::uint64_t seed = 0;

  std::size_t hidden_count() const { return static_cast<std::size_t>(input_weights.rows()); }
};

// Hidden-layer size used when none is given: min(1024, max(64, n / 10)).
inline std::size_t default_hidden_count(std::size_t n) { return std::min<std::size_t>(1024, std::max<std::size_t>(64, n / 10)); }

inline Matrix elm_hidden(const ElmModel& model, const Matrix& x) {
  Matrix h = x * model.input_weights.transpose();
  h.rowwise() += model.biases.transpose();
  return (1.0 / (1.0 + (-h.array()).exp())).matrix();
}

inline ElmModel train_elm(const Dataset& train, const Matrix& targets, std::size_t hidden, double reg_c,
                          std::uint64_t seed) {
  validate(train);
  if (hidden < 1) throw Error(ErrorKind::validation, "ELM needs at least one hidden neuron");
  if (!(reg_c > 0.0)) throw Error(ErrorKind::validation, "regularization C must be positive");
  const auto d = static_cast<Eigen::Index>(train.feature_count());
  const auto l = static_cast<Eigen::Index>(hidden);
  ElmModel model;
  model.seed = seed;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  model.input_weights.resize(l, d);
  for (Eigen::Index i = 0; i < l; ++i)
    for (Eigen::Index j = 0; j < d; ++j) model.input_weights(i, j) = uni(rng);
  model.biases.resize(l);
  for (Eigen::Index i = 0; i < l; ++i) model.biases(i) = uni(rng);

  const Matrix h = elm_hidden(model, train.features_double());
  const Matrix gram = h.transpose() * h;
  model.output_weights = solve_regularized(gram, reg_c, h.transpose() * targets, "ELM output weights");
  return model;
}

inline LabelVector predict_elm(const ElmModel& model, const Matrix& queries) {
  if (queries.rows() == 0) return {};
  if (queries.cols() != model.input_weights.cols())
    throw Error(ErrorKind::shape, "ELM queries have " + std::to_string(queries.cols()) + " features, model expects " +
                                      std::to_string(model.input_weights.cols()));
  return argmax_rows(fixed_order_product(elm_hidden(model, queries), model.output_weights));
}

// ---------------------------------------------------------------------------
// RKELM: a random subset of training rows serves as kernel mapping nodes.

struct RkelmModel {
  Matrix mapping_nodes;   // p x d
  Matrix output_weights;  // p x c
  KernelParams kernel;
  std::uint64_t seed = 0;
};

inline constexpr double kRkelmMappingFraction = 0.10;

// p = max(1, round(fraction * n)) nodes drawn without replacement. The
// mapping_fraction argument exists so tests can compare against full KELM.
inline RkelmModel train_rkelm(const Dataset& train, const Matrix& targets, const KernelParams& kernel, double reg_c,
                              std::uint64_t seed, double mapping_fraction = kRkelmMappingFraction) {
  validate(train);
  kernel.validate();
  if (!(reg_c > 0.0)) throw Error(ErrorKind::validation, "regularization C must be positive");
  if (!(mapping_fraction > 0.0 && mapping_fraction <= 1.0))
    throw Error(ErrorKind::validation, "mapping fraction must lie in (0, 1]");
  const std::size_t n = train.size();
  const auto p = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(mapping_fraction * static_cast<double>(n))));
  std::vector<Index> rows(n);
  std::iota(rows.begin(), rows.end(), Index{0});
  std::mt19937_64 rng(seed);
  std::shuffle(rows.begin(), rows.end(), rng);
  rows.resize(p);

  RkelmModel model;
  model.kernel = kernel;
  model.seed = seed;
  const Matrix x = train.features_double();
  model.mapping_nodes.resize(static_cast<Eigen::Index>(p), x.cols());
  for (std::size_t i = 0; i < p; ++i) model.mapping_nodes.row(static_cast<Eigen::Index>(i)) = x.row(static_cast<Eigen::Index>(rows[i]));

  const Matrix k_map = kernel_cross_matrix(x, model.mapping_nodes, kernel);  // n x p
  model.output_weights = solve_regularized(k_map.transpose() * k_map, reg_c, k_map.transpose() * targets,
                                           "RKELM output weights");
  return model;
}

inline LabelVector predict_rkelm(const RkelmModel& model, const Matrix& queries) {
  if (queries.rows() == 0) return {};
  return argmax_rows(fixed_order_product(kernel_cross_matrix(queries, model.mapping_nodes, model.kernel), model.output_weights));
}

// ---------------------------------------------------------------------------
// k-nearest-neighbor, backed by the partition tree's exact search.

struct KnnModel {
  PartitionTree tree;
  FeatureMatrix points;
  LabelVector labels;
  std::size_t class_count = 0;
  std::size_t k = 1;
};

// Depth giving leaves of roughly 16 rows or more; falls back to shallower
// trees when a node cannot be split (duplicate rows).
inline KnnModel train_knn(const Dataset& train, std::size_t k = 1) {
  validate(train);
  if (k < 1 || k > train.size())
    throw Error(ErrorKind::range, "k=" + std::to_string(k) + " must lie in [1, " + std::to_string(train.size()) + "]");
  KnnModel model;
  model.points = train.features;
  model.labels = train.labels;
  model.class_count = train.class_count;
  model.k = k;
  std::size_t eta = 0;
  while (eta < 16 && (train.size() >> (eta + 1)) >= 16) ++eta;
  for (;;) {
    try {
      model.tree = build_partition(train.features, PartitionConfig{eta, 1});
      break;
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::partition || eta == 0) throw;
      --eta;
    }
  }
  return model;
}

// Majority over the k nearest rows; tied labels resolve to the one whose
// nearest supporting row comes first (by distance, then row index).
inline Label knn_vote(const std::vector<Neighbor>& neighbors, const LabelVector& labels, std::size_t class_count) {
  std::vector<std::size_t> count(class_count, 0);
  std::vector<std::size_t> first(class_count, neighbors.size());
  for (std::size_t i = 0; i < neighbors.size(); ++i) {
    const Label l = labels[neighbors[i].row];
    ++count[l];
    first[l] = std::min(first[l], i);
  }
  Label best = 0;
  for (Label l = 1; l < class_count; ++l)
    if (count[l] > count[best] || (count[l] == count[best] && first[l] < first[best])) best = l;
  return best;
}

inline LabelVector predict_knn(const KnnModel& model, const Matrix& queries) {
  LabelVector out(static_cast<std::size_t>(queries.rows()));
  for (Eigen::Index q = 0; q < queries.rows(); ++q) {
    const auto nb = k_nearest_nodes(model.tree, model.points, queries.row(q), model.k);
    out[static_cast<std::size_t>(q)] = knn_vote(nb, model.labels, model.class_count);
  }
  return out;
}

inline LabelVector knn_predict(const Dataset& train, const Matrix& queries, std::size_t k = 1) {
  return predict_knn(train_knn(train, k), queries);
}

// ---------------------------------------------------------------------------
// Gaussian naive Bayes.

inline constexpr double kGnbVarianceFloor = 1e-9;

struct GnbModel {
  Matrix means;      // c x d
  Matrix variances;  // c x d, floored
  Vector priors;     // c
};

inline GnbModel train_gnb(const Dataset& train) {
  validate(train);
  const auto c = static_cast<Eigen::Index>(train.class_count);
  const auto d = static_cast<Eigen::Index>(train.feature_count());
  GnbModel m;
  m.means = Matrix::Zero(c, d);
  m.variances = Matrix::Zero(c, d);
  m.priors = Vector::Zero(c);
  std::vector<std::size_t> count(train.class_count, 0);
  for (std::size_t i = 0; i < train.size(); ++i) {
    ++count[train.labels[i]];
    m.means.row(train.labels[i]) += train.features.row(static_cast<Eigen::Index>(i)).cast<double>();
  }
  for (Eigen::Index k = 0; k < c; ++k) {
    if (count[k] == 0) throw Error(ErrorKind::empty, "naive Bayes: class " + std::to_string(k) + " has no samples");
    m.means.row(k) /= static_cast<double>(count[k]);
  }
  for (std::size_t i = 0; i < train.size(); ++i) {
    const auto k = train.labels[i];
    const auto diff = (train.features.row(static_cast<Eigen::Index>(i)).cast<double>() - m.means.row(k)).array();
    m.variances.row(k) += (diff * diff).matrix();
  }
  for (Eigen::Index k = 0; k < c; ++k) {
    m.variances.row(k) /= static_cast<double>(count[k]);
    m.variances.row(k) = m.variances.row(k).cwiseMax(kGnbVarianceFloor);
    m.priors(k) = static_cast<double>(count[k]) / static_cast<double>(train.size());
  }
  return m;
}

// Log-space posterior per class, argmax with ties to the lowest class.
inline Matrix gnb_log_posteriors(const GnbModel& m, const Matrix& queries) {
  if (queries.rows() > 0 && queries.cols() != m.means.cols())
    throw Error(ErrorKind::shape, "naive Bayes queries have " + std::to_string(queries.cols()) +
                                      " features, model expects " + std::to_string(m.means.cols()));
  Matrix out(queries.rows(), m.means.rows());
  for (Eigen::Index q = 0; q < queries.rows(); ++q) {
    for (Eigen::Index k = 0; k < m.means.rows(); ++k) {
      double s = std::log(m.priors(k));
      for (Eigen::Index j = 0; j < m.means.cols(); ++j) {
        const double var = m.variances(k, j);
        const double diff = queries(q, j) - m.means(k, j);
        s += -0.5 * std::log(2.0 * std::numbers::pi * var) - diff * diff / (2.0 * var);
      }
      out(q, k) = s;
    }
  }
  return out;
}

inline LabelVector predict_gnb(const GnbModel& m, const Matrix& queries) {
  return argmax_rows(gnb_log_posteriors(m, queries));
}

// ---------------------------------------------------------------------------
// Linear least-squares classifier: ridge regression of one-hot targets on
// [x, 1]. Reference point for the linear-inseparability comparison.

struct LinearModel {
  Matrix weights;  // (d + 1) x c
};

inline Matrix with_bias_column(const Matrix& x) {
  Matrix a(x.rows(), x.cols() + 1);
  a.leftCols(x.cols()) = x;
  a.col(x.cols()).setOnes();
  return a;
}

inline LinearModel train_linear(const Dataset& train, const Matrix& targets, double ridge = 1e-6) {
  validate(train);
  const Matrix a = with_bias_column(train.features_double());
  return LinearModel{solve_regularized(a.transpose() * a, ridge, a.transpose() * targets, "linear classifier")};
}

inline LabelVector predict_linear(const LinearModel& m, const Matrix& queries) {
  if (queries.rows() == 0) return {};
  return argmax_rows(with_bias_column(queries) * m.weights);
}

}  // namespace mckelm
