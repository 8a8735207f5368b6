#pragma once

#include "mckelm/error.hpp"
#include "mckelm/parallel.hpp"
#include "mckelm/types.hpp"

#include <cmath>
#include <string>

namespace mckelm {

enum class KernelKind { rbf, chi_square };

inline const char* to_string(KernelKind k) { return k == KernelKind::rbf ? "rbf" : "chi2"; }

struct KernelParams {
  KernelKind kind = KernelKind::rbf;
  double gamma = 1.0;  // RBF width
  double sigma = 1.0;  // chi-square scale

  void validate() const {
    if (kind == KernelKind::rbf && !(gamma > 0.0 && std::isfinite(gamma)))
      throw Error(ErrorKind::validation, "RBF gamma must be positive");
    if (kind == KernelKind::chi_square && !(sigma > 0.0 && std::isfinite(sigma)))
      throw Error(ErrorKind::validation, "chi-square sigma must be positive");
  }

  bool operator==(const KernelParams&) const = default;
};

namespace detail {

template <typename A, typename B>
void check_same_size(const Eigen::MatrixBase<A>& x, const Eigen::MatrixBase<B>& y) {
  if (x.size() != y.size()) {
    throw Error(ErrorKind::shape, "kernel arguments differ in dimension (" + std::to_string(x.size()) + " vs " +
                                      std::to_string(y.size()) + ")");
  }
}

// Summation runs in index order and every summand is symmetric in (x, y),
// so k(x, y) == k(y, x) bit for bit.
template <typename A, typename B>
double squared_distance(const Eigen::MatrixBase<A>& x, const Eigen::MatrixBase<B>& y) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double diff = static_cast<double>(x(i)) - static_cast<double>(y(i));
    s += diff * diff;
  }
  return s;
}

template <typename A, typename B>
double chi_square_distance(const Eigen::MatrixBase<A>& x, const Eigen::MatrixBase<B>& y) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double xi = static_cast<double>(x(i));
    const double yi = static_cast<double>(y(i));
    const double denom = xi + yi;
    if (denom == 0.0) continue;  // 0/0 summand is defined as 0
    const double diff = xi - yi;
    s += diff * diff / denom;
  }
  return s;
}

template <typename A>
void check_unit_interval(const Eigen::MatrixBase<A>& x, const char* which) {
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double v = static_cast<double>(x(i));
    if (!(v >= 0.0 && v <= 1.0)) {
      throw Error(ErrorKind::domain, std::string("chi-square kernel: component ") + std::to_string(i) + " of " +
                                         which + " is " + std::to_string(v) + ", outside [0, 1]");
    }
  }
}

}  // namespace detail

/// exp(-gamma * ||x - y||^2).
template <typename A, typename B>
double rbf_kernel(const Eigen::MatrixBase<A>& x, const Eigen::MatrixBase<B>& y, double gamma) {
  detail::check_same_size(x, y);
  return std::exp(-gamma * detail::squared_distance(x, y));
}

/// exp(-sigma * sum_i (x_i - y_i)^2 / (x_i + y_i)) for inputs in [0, 1].
template <typename A, typename B>
double chi_square_kernel(const Eigen::MatrixBase<A>& x, const Eigen::MatrixBase<B>& y, double sigma) {
  detail::check_same_size(x, y);
  detail::check_unit_interval(x, "x");
  detail::check_unit_interval(y, "y");
  return std::exp(-sigma * detail::chi_square_distance(x, y));
}

template <typename A, typename B>
double kernel(const Eigen::MatrixBase<A>& x, const Eigen::MatrixBase<B>& y, const KernelParams& p) {
  return p.kind == KernelKind::rbf ? rbf_kernel(x, y, p.gamma) : chi_square_kernel(x, y, p.sigma);
}

namespace detail {

inline void check_rows_unit_interval(const Matrix& rows, const char* which) {
  for (Eigen::Index i = 0; i < rows.rows(); ++i) {
    for (Eigen::Index j = 0; j < rows.cols(); ++j) {
      const double v = rows(i, j);
      if (!(v >= 0.0 && v <= 1.0)) {
        throw Error(ErrorKind::domain, std::string("chi-square kernel: ") + which + " row " + std::to_string(i) +
                                           ", component " + std::to_string(j) + " is " + std::to_string(v) +
                                           ", outside [0, 1]");
      }
    }
  }
}

// Unchecked entry; callers validate the domain once per matrix.
inline double kernel_entry(const Matrix& a, Eigen::Index i, const Matrix& b, Eigen::Index j, const KernelParams& p) {
  if (p.kind == KernelKind::rbf) return std::exp(-p.gamma * squared_distance(a.row(i), b.row(j)));
  return std::exp(-p.sigma * chi_square_distance(a.row(i), b.row(j)));
}

}  // namespace detail

// Dense n x n kernel matrix. Each unordered pair is evaluated once and
// mirrored; the diagonal is exactly 1.
inline Matrix kernel_matrix(const Matrix& rows, const KernelParams& params, std::size_t threads = 1) {
  params.validate();
  if (params.kind == KernelKind::chi_square) detail::check_rows_unit_interval(rows, "support");
  const Eigen::Index n = rows.rows();
  Matrix k(n, n);
  parallel_for(static_cast<std::size_t>(n), threads, [&](std::size_t ui) {
    const auto i = static_cast<Eigen::Index>(ui);
    k(i, i) = 1.0;
    for (Eigen::Index j = 0; j < i; ++j) k(i, j) = detail::kernel_entry(rows, i, rows, j, params);
  });
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j) k(i, j) = k(j, i);
  return k;
}

// m x n matrix whose row i holds k(query_i, support_j) for all j.
inline Matrix kernel_cross_matrix(const Matrix& queries, const Matrix& support, const KernelParams& params,
                                  std::size_t threads = 1) {
  params.validate();
  if (queries.rows() > 0 && queries.cols() != support.cols()) {
    throw Error(ErrorKind::shape, "queries have " + std::to_string(queries.cols()) + " features, support has " +
                                      std::to_string(support.cols()));
  }
  if (params.kind == KernelKind::chi_square) {
    detail::check_rows_unit_interval(queries, "query");
    detail::check_rows_unit_interval(support, "support");
  }
  Matrix k(queries.rows(), support.rows());
  parallel_for(static_cast<std::size_t>(queries.rows()), threads, [&](std::size_t ui) {
    const auto i = static_cast<Eigen::Index>(ui);
    for (Eigen::Index j = 0; j < support.rows(); ++j) k(i, j) = detail::kernel_entry(queries, i, support, j, params);
  });
  return k;
}

}  // namespace mckelm
