#pragma once

#include "mckelm/dataset.hpp"
#include "mckelm/error.hpp"
#include "mckelm/kelm.hpp"
#include "mckelm/parallel.hpp"
#include "mckelm/partition.hpp"
#include "mckelm/types.hpp"

#include <algorithm>
#include <limits>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace mckelm {

// How routed columns are combined. Majority is the default; score averaging
// sums the columns' score rows and takes the argmax.
enum class VoteMode { majority, score_average };

struct MckelmConfig {
  PartitionConfig partition;
  KelmConfig kelm;
  std::size_t route_k = 3;
  VoteMode vote_mode = VoteMode::majority;
  std::size_t threads = default_thread_count();
};

struct MckelmModel {
  PartitionTree tree;
  std::vector<KelmColumn> columns;  // column s trained on leaf s
  FeatureMatrix routing_points;     // all training rows, for nearest-node routing
  std::size_t route_k = 3;
  std::size_t class_count = 0;
  VoteMode vote_mode = VoteMode::majority;

  std::size_t feature_count() const { return tree.feature_count; }

  void validate() const {
    if (columns.size() != tree.leaf_count())
      throw Error(ErrorKind::validation, "model has " + std::to_string(columns.size()) + " columns for " +
                                             std::to_string(tree.leaf_count()) + " leaves");
    if (route_k < 1 || route_k > static_cast<std::size_t>(routing_points.rows()))
      throw Error(ErrorKind::range, "route_k=" + std::to_string(route_k) + " must lie in [1, " +
                                        std::to_string(routing_points.rows()) + "]");
  }
};

// Rebuilds the routing rows from the columns' supports and leaf memberships.
inline FeatureMatrix gather_routing_points(const PartitionTree& tree, const std::vector<KelmColumn>& columns) {
  FeatureMatrix points(static_cast<Eigen::Index>(tree.row_count), static_cast<Eigen::Index>(tree.feature_count));
  for (std::size_t s = 0; s < tree.leaf_count(); ++s) {
    const auto& members = tree.leaf(s).members;
    if (static_cast<std::size_t>(columns[s].support.rows()) != members.size())
      throw Error(ErrorKind::format, "column " + std::to_string(s) + " support does not match its leaf");
    for (std::size_t i = 0; i < members.size(); ++i)
      points.row(static_cast<Eigen::Index>(members[i])) = columns[s].support.row(static_cast<Eigen::Index>(i)).cast<float>();
  }
  return points;
}

// Partition, then one KELM per leaf. Columns share no mutable state and train
// concurrently; each lands in its own slot.
inline MckelmModel train_mckelm(const Dataset& train, const Matrix& targets, const MckelmConfig& config) {
  validate(train);
  config.kelm.validate();
  if (targets.rows() != static_cast<Eigen::Index>(train.size()))
    throw Error(ErrorKind::shape, "target rows do not match training rows");
  if (config.route_k < 1 || config.route_k > train.size())
    throw Error(ErrorKind::range, "route_k=" + std::to_string(config.route_k) + " must lie in [1, " +
                                      std::to_string(train.size()) + "]");

  MckelmModel model;
  PartitionConfig pc = config.partition;
  pc.threads = config.threads;
  model.tree = build_partition(train, pc);
  model.routing_points = train.features;
  model.route_k = config.route_k;
  model.class_count = train.class_count;
  model.vote_mode = config.vote_mode;
  model.columns.resize(model.tree.leaf_count());

  parallel_for(model.tree.leaf_count(), config.threads, [&](std::size_t s) {
    const auto& members = model.tree.leaf(s).members;
    if (members.empty()) throw Error(ErrorKind::partition, "subset " + std::to_string(s) + " is empty");
    Matrix support(static_cast<Eigen::Index>(members.size()), train.features.cols());
    Matrix t(static_cast<Eigen::Index>(members.size()), targets.cols());
    for (std::size_t i = 0; i < members.size(); ++i) {
      support.row(static_cast<Eigen::Index>(i)) = train.features.row(static_cast<Eigen::Index>(members[i])).cast<double>();
      t.row(static_cast<Eigen::Index>(i)) = targets.row(static_cast<Eigen::Index>(members[i]));
    }
    model.columns[s] = train_kelm(support, t, config.kelm, s);
  });
  return model;
}

struct RoutedSubset {
  std::size_t subset_id = 0;
  double distance = 0.0;        // nearest routed row of this subset
  std::size_t neighbor_count = 0;
};

namespace detail {

inline std::vector<RoutedSubset> routed_subsets(const std::vector<Neighbor>& neighbors,
                                                const std::vector<std::size_t>& owner) {
  std::map<std::size_t, RoutedSubset> by_subset;
  for (const Neighbor& nb : neighbors) {
    auto [it, inserted] = by_subset.try_emplace(owner[nb.row], RoutedSubset{owner[nb.row], nb.distance, 0});
    it->second.distance = std::min(it->second.distance, nb.distance);
    ++it->second.neighbor_count;
  }
  std::vector<RoutedSubset> out;
  for (auto& [id, r] : by_subset) out.push_back(r);
  return out;
}

}  // namespace detail

// Subsets owning the route_k training rows nearest to the query (exact
// search), in ascending subset id.
template <typename Derived>
std::vector<RoutedSubset> route(const MckelmModel& model, const Eigen::MatrixBase<Derived>& query) {
  const auto neighbors = k_nearest_nodes(model.tree, model.routing_points, query, model.route_k);
  return detail::routed_subsets(neighbors, model.tree.row_owner());
}

struct Vote {
  Label label = 0;
  double distance = 0.0;
};

// Plurality label. Ties go to the label whose supporting column is nearest,
// then to the lowest label.
inline Label vote(const std::vector<Vote>& votes) {
  if (votes.empty()) throw Error(ErrorKind::empty, "vote over an empty list");
  std::map<Label, std::pair<std::size_t, double>> tally;  // label -> (count, nearest distance)
  for (const Vote& v : votes) {
    auto [it, inserted] = tally.try_emplace(v.label, 0, std::numeric_limits<double>::infinity());
    ++it->second.first;
    it->second.second = std::min(it->second.second, v.distance);
  }
  auto best = tally.begin();
  for (auto it = std::next(tally.begin()); it != tally.end(); ++it) {
    const auto [count, dist] = it->second;
    const auto [best_count, best_dist] = best->second;
    if (count > best_count || (count == best_count && dist < best_dist)) best = it;
  }
  return best->first;
}

struct ColumnVote {
  std::size_t subset_id = 0;
  Label label = 0;
  double distance = 0.0;
};

struct QueryReport {
  std::vector<ColumnVote> votes;  // ascending subset id
};

struct MckelmPrediction {
  LabelVector labels;
  std::vector<QueryReport> reports;
};

// Routes every query, evaluates each selected column on the batch of queries
// routed to it, then merges the per-query votes in subset order.
inline MckelmPrediction predict_mckelm(const MckelmModel& model, const Matrix& queries,
                                       std::size_t threads = default_thread_count()) {
  MckelmPrediction out;
  const auto m = static_cast<std::size_t>(queries.rows());
  if (m == 0) return out;
  if (static_cast<std::size_t>(queries.cols()) != model.feature_count()) {
    throw Error(ErrorKind::shape, "queries have " + std::to_string(queries.cols()) + " features, model expects " +
                                      std::to_string(model.feature_count()));
  }
  model.validate();
  const std::vector<std::size_t> owner = model.tree.row_owner();

  std::vector<std::vector<RoutedSubset>> routes(m);
  parallel_for(m, threads, [&](std::size_t q) {
    const auto neighbors = k_nearest_nodes(model.tree, model.routing_points, queries.row(static_cast<Eigen::Index>(q)),
                                           model.route_k);
    routes[q] = detail::routed_subsets(neighbors, owner);
  });

  // queries routed to each column
  std::vector<std::vector<std::size_t>> batch(model.columns.size());
  for (std::size_t q = 0; q < m; ++q)
    for (const RoutedSubset& r : routes[q]) batch[r.subset_id].push_back(q);

  std::vector<KelmPrediction> results(model.columns.size());
  parallel_for(model.columns.size(), threads, [&](std::size_t s) {
    if (batch[s].empty()) return;
    Matrix sub(static_cast<Eigen::Index>(batch[s].size()), queries.cols());
    for (std::size_t i = 0; i < batch[s].size(); ++i)
      sub.row(static_cast<Eigen::Index>(i)) = queries.row(static_cast<Eigen::Index>(batch[s][i]));
    results[s] = predict_kelm(model.columns[s], sub);
  });

  // position of each query inside its column batch
  std::vector<std::size_t> cursor(model.columns.size(), 0);
  out.labels.resize(m);
  out.reports.resize(m);
  for (std::size_t q = 0; q < m; ++q) {
    std::vector<Vote> votes;
    Vector summed = Vector::Zero(static_cast<Eigen::Index>(model.class_count));
    for (const RoutedSubset& r : routes[q]) {
      const std::size_t pos = cursor[r.subset_id]++;
      const Label l = results[r.subset_id].labels[pos];
      votes.push_back({l, r.distance});
      out.reports[q].votes.push_back({r.subset_id, l, r.distance});
      summed += results[r.subset_id].scores.row(static_cast<Eigen::Index>(pos)).transpose();
    }
    out.labels[q] = model.vote_mode == VoteMode::majority ? vote(votes) : argmax_row(summed);
  }
  return out;
}

}  // namespace mckelm
