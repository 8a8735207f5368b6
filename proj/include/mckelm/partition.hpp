#pragma once

#include "mckelm/dataset.hpp"
#include "mckelm/error.hpp"
#include "mckelm/parallel.hpp"
#include "mckelm/types.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <queue>
#include <string>
#include <vector>

namespace mckelm {

inline constexpr double kDensityEpsilon = 1e-9;
inline constexpr std::size_t kMaxEta = 30;

struct PartitionConfig {
  std::size_t eta = 0;  // chopping rounds; 2^eta leaf subsets
  std::size_t threads = 1;

  std::size_t subset_count() const { return std::size_t{1} << eta; }

  void validate() const {
    if (eta > kMaxEta) throw Error(ErrorKind::validation, "eta must be at most " + std::to_string(kMaxEta));
  }
};

namespace detail {

// Per-feature extents of the given rows, accumulated in float (min/max are exact).
inline void row_extents(const FeatureMatrix& points, const Index* rows, std::size_t count,
                        Eigen::ArrayXf& lo, Eigen::ArrayXf& hi) {
  const auto d = points.cols();
  lo.setConstant(d, std::numeric_limits<float>::infinity());
  hi.setConstant(d, -std::numeric_limits<float>::infinity());
  for (std::size_t p = 0; p < count; ++p) {
    const auto r = points.row(static_cast<Eigen::Index>(rows[p])).array();
    lo = lo.min(r.transpose());
    hi = hi.max(r.transpose());
  }
}

inline double density_from_extents(std::size_t count, const Eigen::ArrayXf& lo, const Eigen::ArrayXf& hi) {
  double log_sum = 0.0;
  for (Eigen::Index j = 0; j < lo.size(); ++j) {
    const double range = static_cast<double>(hi(j)) - static_cast<double>(lo(j));
    log_sum += std::log(range + kDensityEpsilon);
  }
  return static_cast<double>(count) / std::exp(log_sum / static_cast<double>(lo.size()));
}

inline double density_of(const FeatureMatrix& points, const Index* rows, std::size_t count) {
  Eigen::ArrayXf lo, hi;
  row_extents(points, rows, count, lo, hi);
  return density_from_extents(count, lo, hi);
}

inline std::vector<Index> all_rows(std::size_t n) {
  std::vector<Index> rows(n);
  std::iota(rows.begin(), rows.end(), Index{0});
  return rows;
}

}  // namespace detail

// Points per unit geometric-mean extent:
//   m / exp(mean_i log(range_i + eps)),  eps = 1e-9.
inline double density(const FeatureMatrix& rows) {
  if (rows.rows() == 0) throw Error(ErrorKind::empty, "density of an empty row set");
  const auto idx = detail::all_rows(static_cast<std::size_t>(rows.rows()));
  return detail::density_of(rows, idx.data(), idx.size());
}

// One candidate median chop along `feature`.
struct CandidateSplit {
  std::size_t feature = 0;
  double median = 0.0;           // largest value on the left side
  double chopped_density = 0.0;  // mean of the two halves' densities
  double deviation = 0.0;        // |chopped_density - root_density|
  std::vector<Index> left;       // ascending row indices
  std::vector<Index> right;
};

// Orders `rows` by (value of feature, row index) and cuts after ceil(m/2):
// rows equal to the median fill the left side first, in index order.
inline CandidateSplit evaluate_split(const FeatureMatrix& points, const std::vector<Index>& rows, std::size_t feature,
                                     double root_density) {
  const std::size_t m = rows.size();
  std::vector<Index> order = rows;
  const auto f = static_cast<Eigen::Index>(feature);
  std::sort(order.begin(), order.end(), [&](Index a, Index b) {
    const float va = points(static_cast<Eigen::Index>(a), f);
    const float vb = points(static_cast<Eigen::Index>(b), f);
    return va < vb || (va == vb && a < b);
  });
  const std::size_t left_count = (m + 1) / 2;
  CandidateSplit s;
  s.feature = feature;
  s.median = static_cast<double>(points(static_cast<Eigen::Index>(order[left_count - 1]), f));
  const double dl = detail::density_of(points, order.data(), left_count);
  const double dr = detail::density_of(points, order.data() + left_count, m - left_count);
  s.chopped_density = 0.5 * (dl + dr);
  s.deviation = std::abs(s.chopped_density - root_density);
  s.left.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(left_count));
  s.right.assign(order.begin() + static_cast<std::ptrdiff_t>(left_count), order.end());
  std::sort(s.left.begin(), s.left.end());
  std::sort(s.right.begin(), s.right.end());
  return s;
}

// Candidate features are those that vary over `rows`; among them the one whose
// median chop minimizes |D_i - O| wins, ties to the lowest feature index.
inline CandidateSplit choose_split(const FeatureMatrix& points, const std::vector<Index>& rows, double root_density,
                                   const std::string& where = "node") {
  if (rows.size() < 2) throw Error(ErrorKind::partition, where + ": need at least 2 rows to split");
  Eigen::ArrayXf lo, hi;
  detail::row_extents(points, rows.data(), rows.size(), lo, hi);
  std::optional<CandidateSplit> best;
  for (Eigen::Index j = 0; j < points.cols(); ++j) {
    if (!(hi(j) > lo(j))) continue;
    CandidateSplit c = evaluate_split(points, rows, static_cast<std::size_t>(j), root_density);
    if (!best || c.deviation < best->deviation) best = std::move(c);
  }
  if (!best) throw Error(ErrorKind::partition, where + ": every feature is constant, split impossible");
  return std::move(*best);
}

struct SplitFeature {
  std::size_t feature = 0;
  double median = 0.0;
};

inline SplitFeature choose_split_feature(const FeatureMatrix& rows, double root_density) {
  const auto idx = detail::all_rows(static_cast<std::size_t>(rows.rows()));
  const CandidateSplit c = choose_split(rows, idx, root_density);
  return {c.feature, c.median};
}

// Complete binary tree in heap layout: node i has children 2i+1 and 2i+2.
// Internal nodes occupy [0, 2^eta - 1); leaf for subset s is node 2^eta - 1 + s.
struct PartitionNode {
  std::size_t size = 0;  // rows under this node
  // internal nodes
  std::size_t split_feature = 0;
  double split_value = 0.0;
  double chopped_density = 0.0;
  double deviation = 0.0;
  // leaves
  std::vector<Index> members;  // ascending row indices
};

struct PartitionTree {
  std::size_t eta = 0;
  std::size_t feature_count = 0;
  std::size_t row_count = 0;
  double root_density = 0.0;
  std::vector<PartitionNode> nodes;

  std::size_t leaf_count() const { return std::size_t{1} << eta; }
  std::size_t internal_count() const { return leaf_count() - 1; }
  bool is_leaf(std::size_t node) const { return node >= internal_count(); }
  const PartitionNode& leaf(std::size_t subset_id) const { return nodes[internal_count() + subset_id]; }
  std::size_t subset_of_node(std::size_t node) const { return node - internal_count(); }

  // Subset id of every training row.
  std::vector<std::size_t> row_owner() const {
    std::vector<std::size_t> owner(row_count);
    for (std::size_t s = 0; s < leaf_count(); ++s)
      for (Index r : leaf(s).members) owner[r] = s;
    return owner;
  }
};

// eta rounds of median chops; every chop compares against the density of the
// full training set.
inline PartitionTree build_partition(const FeatureMatrix& points, const PartitionConfig& config) {
  config.validate();
  const std::size_t n = static_cast<std::size_t>(points.rows());
  const std::size_t leaves = config.subset_count();
  if (n < leaves) {
    throw Error(ErrorKind::partition, "insufficient data: " + std::to_string(n) + " rows cannot fill " +
                                          std::to_string(leaves) + " subsets (eta=" + std::to_string(config.eta) + ")");
  }
  if (n == 0) throw Error(ErrorKind::empty, "cannot partition an empty dataset");

  PartitionTree tree;
  tree.eta = config.eta;
  tree.feature_count = static_cast<std::size_t>(points.cols());
  tree.row_count = n;
  tree.root_density = density(points);
  tree.nodes.resize(2 * leaves - 1);

  std::vector<std::vector<Index>> rows_at(tree.nodes.size());
  rows_at[0] = detail::all_rows(n);
  for (std::size_t level = 0; level < config.eta; ++level) {
    const std::size_t first = (std::size_t{1} << level) - 1;
    const std::size_t width = std::size_t{1} << level;
    parallel_for(width, config.threads, [&](std::size_t k) {
      const std::size_t node = first + k;
      CandidateSplit s = choose_split(points, rows_at[node], tree.root_density, "node " + std::to_string(node));
      PartitionNode& out = tree.nodes[node];
      out.size = rows_at[node].size();
      out.split_feature = s.feature;
      out.split_value = s.median;
      out.chopped_density = s.chopped_density;
      out.deviation = s.deviation;
      rows_at[2 * node + 1] = std::move(s.left);
      rows_at[2 * node + 2] = std::move(s.right);
      std::vector<Index>().swap(rows_at[node]);
    });
  }
  for (std::size_t s = 0; s < leaves; ++s) {
    PartitionNode& leaf = tree.nodes[tree.internal_count() + s];
    leaf.members = std::move(rows_at[tree.internal_count() + s]);
    leaf.size = leaf.members.size();
  }
  return tree;
}

inline PartitionTree build_partition(const Dataset& train, const PartitionConfig& config) {
  return build_partition(train.features, config);
}

// Descends by split comparisons; a query equal to a split value goes left.
template <typename Derived>
std::size_t locate_leaf(const PartitionTree& tree, const Eigen::MatrixBase<Derived>& query) {
  if (static_cast<std::size_t>(query.size()) != tree.feature_count) {
    throw Error(ErrorKind::shape, "query has " + std::to_string(query.size()) + " features, tree expects " +
                                      std::to_string(tree.feature_count));
  }
  std::size_t node = 0;
  while (!tree.is_leaf(node)) {
    const PartitionNode& nd = tree.nodes[node];
    const double v = static_cast<double>(query(static_cast<Eigen::Index>(nd.split_feature)));
    node = v <= nd.split_value ? 2 * node + 1 : 2 * node + 2;
  }
  return tree.subset_of_node(node);
}

struct Neighbor {
  Index row = 0;
  double distance = 0.0;

  bool operator==(const Neighbor&) const = default;
};

namespace detail {

struct HeapEntry {
  double squared;
  Index row;
  bool operator<(const HeapEntry& o) const { return squared < o.squared || (squared == o.squared && row < o.row); }
};

template <typename Q>
double squared_distance_to(const FeatureMatrix& points, Index row, const Q& query) {
  double s = 0.0;
  const auto r = static_cast<Eigen::Index>(row);
  for (Eigen::Index j = 0; j < points.cols(); ++j) {
    const double diff = query(j) - static_cast<double>(points(r, j));
    s += diff * diff;
  }
  return s;
}

}  // namespace detail

// Exact k nearest training rows by Euclidean distance, ascending, ties to the
// lower row index. Branch-and-bound over the partition tree: the far child is
// visited unless its splitting hyperplane is strictly farther than the current
// k-th best. Results are identical to a linear scan.
template <typename Derived>
std::vector<Neighbor> k_nearest_nodes(const PartitionTree& tree, const FeatureMatrix& points,
                                      const Eigen::MatrixBase<Derived>& query_in, std::size_t k) {
  const std::size_t n = static_cast<std::size_t>(points.rows());
  if (k < 1 || k > n) {
    throw Error(ErrorKind::range, "k=" + std::to_string(k) + " must lie in [1, " + std::to_string(n) + "]");
  }
  if (static_cast<std::size_t>(query_in.size()) != tree.feature_count ||
      static_cast<std::size_t>(points.cols()) != tree.feature_count) {
    throw Error(ErrorKind::shape, "query has " + std::to_string(query_in.size()) + " features, tree expects " +
                                      std::to_string(tree.feature_count));
  }
  const Eigen::VectorXd query = query_in.template cast<double>();
  std::priority_queue<detail::HeapEntry> heap;  // max-heap: worst on top

  auto offer = [&](Index row) {
    const detail::HeapEntry e{detail::squared_distance_to(points, row, query), row};
    if (heap.size() < k) {
      heap.push(e);
    } else if (e < heap.top()) {
      heap.pop();
      heap.push(e);
    }
  };

  auto visit = [&](auto&& self, std::size_t node) -> void {
    if (tree.is_leaf(node)) {
      for (Index r : tree.nodes[node].members) offer(r);
      return;
    }
    const PartitionNode& nd = tree.nodes[node];
    const double q = query(static_cast<Eigen::Index>(nd.split_feature));
    const bool go_left = q <= nd.split_value;
    self(self, go_left ? 2 * node + 1 : 2 * node + 2);
    const double gap = go_left ? nd.split_value - q : q - nd.split_value;
    if (heap.size() < k || gap * gap <= heap.top().squared) self(self, go_left ? 2 * node + 2 : 2 * node + 1);
  };
  visit(visit, 0);

  std::vector<Neighbor> out(heap.size());
  for (std::size_t i = heap.size(); i-- > 0;) {
    out[i] = Neighbor{heap.top().row, std::sqrt(heap.top().squared)};
    heap.pop();
  }
  return out;
}

}  // namespace mckelm
