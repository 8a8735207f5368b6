#pragma once

#include "mckelm/dataset.hpp"
#include "mckelm/error.hpp"
#include "mckelm/kernels.hpp"
#include "mckelm/types.hpp"

#include <Eigen/Cholesky>

#include <cmath>
#include <string>

namespace mckelm {

// Solves (ridge * I + gram) X = rhs through a Cholesky factorization.
// `gram` must be symmetric positive semidefinite; only its lower triangle is read.
inline Matrix solve_regularized(const Matrix& gram, double ridge, const Matrix& rhs, const std::string& context) {
  if (gram.rows() != gram.cols() || gram.rows() != rhs.rows()) {
    throw Error(ErrorKind::shape, context + ": system is " + std::to_string(gram.rows()) + "x" +
                                      std::to_string(gram.cols()) + " but rhs has " + std::to_string(rhs.rows()) +
                                      " rows");
  }
  Eigen::MatrixXd system = gram;
  system.diagonal().array() += ridge;
  if (!system.allFinite()) throw Error(ErrorKind::numerical, context + ": system matrix has non-finite entries");
  Eigen::LLT<Eigen::MatrixXd, Eigen::Lower> llt(system);
  if (llt.info() != Eigen::Success) {
    throw Error(ErrorKind::numerical, context + ": Cholesky factorization failed (matrix not positive definite)");
  }
  Matrix x = llt.solve(Eigen::MatrixXd(rhs));
  if (!x.allFinite()) throw Error(ErrorKind::numerical, context + ": solution has non-finite entries");
  return x;
}

// a * b with every entry summed in index order, so a row's result does not
// depend on which other rows share the batch.
inline Matrix fixed_order_product(const Matrix& a, const Matrix& b) {
  Matrix out = Matrix::Zero(a.rows(), b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      const double w = a(i, j);
      for (Eigen::Index c = 0; c < b.cols(); ++c) out(i, c) += w * b(j, c);
    }
  return out;
}

struct KelmConfig {
  KernelParams kernel;
  double regularization_c = 1.0;  // ridge strength: the system is (C I + K)

  void validate() const {
    kernel.validate();
    if (!(regularization_c > 0.0 && std::isfinite(regularization_c)))
      throw Error(ErrorKind::validation, "regularization C must be positive");
  }

  bool operator==(const KelmConfig&) const = default;
};

// One trained kernel ELM: its support rows and output weights.
struct KelmColumn {
  Matrix support;  // n_s x d
  Matrix beta;     // n_s x c
  KelmConfig config;
  std::size_t subset_id = 0;

  std::size_t class_count() const { return static_cast<std::size_t>(beta.cols()); }
  std::size_t feature_count() const { return static_cast<std::size_t>(support.cols()); }
};

// beta = (C I + K)^{-1} T with K the kernel matrix of the support rows.
inline KelmColumn train_kelm(const Matrix& support, const Matrix& targets, const KelmConfig& config,
                             std::size_t subset_id = 0, std::size_t threads = 1) {
  config.validate();
  const std::string context = "subset " + std::to_string(subset_id);
  if (support.rows() == 0) throw Error(ErrorKind::empty, context + ": no training rows");
  if (targets.rows() != support.rows()) {
    throw Error(ErrorKind::shape, context + ": " + std::to_string(targets.rows()) + " target rows for " +
                                      std::to_string(support.rows()) + " training rows");
  }
  if (!support.allFinite()) throw Error(ErrorKind::numerical, context + ": training rows have non-finite entries");
  KelmColumn column;
  column.support = support;
  column.config = config;
  column.subset_id = subset_id;
  const Matrix k = kernel_matrix(support, config.kernel, threads);
  column.beta = solve_regularized(k, config.regularization_c, targets, context);
  return column;
}

inline KelmColumn train_kelm(const Dataset& subset, const Matrix& targets, const KelmConfig& config,
                             std::size_t subset_id = 0, std::size_t threads = 1) {
  return train_kelm(subset.features_double(), targets, config, subset_id, threads);
}

struct KelmPrediction {
  LabelVector labels;
  Matrix scores;  // m x c
};

// scores = K(queries, support) * beta; labels are row-wise argmax.
inline KelmPrediction predict_kelm(const KelmColumn& column, const Matrix& queries, std::size_t threads = 1) {
  KelmPrediction out;
  if (queries.rows() == 0) {
    out.scores.resize(0, column.beta.cols());
    return out;
  }
  if (queries.cols() != column.support.cols()) {
    throw Error(ErrorKind::shape, "subset " + std::to_string(column.subset_id) + ": queries have " +
                                      std::to_string(queries.cols()) + " features, column expects " +
                                      std::to_string(column.support.cols()));
  }
  const Matrix k = kernel_cross_matrix(queries, column.support, column.config.kernel, threads);
  out.scores = fixed_order_product(k, column.beta);
  out.labels = argmax_rows(out.scores);
  return out;
}

}  // namespace mckelm
