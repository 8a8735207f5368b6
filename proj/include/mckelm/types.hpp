#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <cstdint>
#include <vector>

namespace mckelm {

// Datasets keep features in single precision (the on-disk dataset format is
// float32); model weights and kernel arithmetic use double.
using FeatureMatrix = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

using Label = std::uint32_t;
using LabelVector = std::vector<Label>;
using Index = std::size_t;

// Row-wise argmax; ties resolve to the lowest column index.
template <typename Derived>
Label argmax_row(const Eigen::MatrixBase<Derived>& row) {
  Label best = 0;
  for (Eigen::Index j = 1; j < row.size(); ++j) {
    if (row(j) > row(best)) best = static_cast<Label>(j);
  }
  return best;
}

inline LabelVector argmax_rows(const Matrix& scores) {
  LabelVector out(static_cast<std::size_t>(scores.rows()));
  for (Eigen::Index i = 0; i < scores.rows(); ++i) out[i] = argmax_row(scores.row(i));
  return out;
}

}  // namespace mckelm
