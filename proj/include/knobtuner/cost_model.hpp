#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "knobtuner/design_space.hpp"
#include "knobtuner/errors.hpp"

namespace knobtuner {

/// log2(1 + value) of each selected knob value (sign-mirrored for negatives).
inline std::vector<double> featurize(const DesignSpace& space, const Configuration& config) {
  const auto values = space.values_of(config);
  std::vector<double> features(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double v = static_cast<double>(values[i]);
    features[i] = v >= 0.0 ? std::log2(1.0 + v) : -std::log2(1.0 - v);
  }
  return features;
}

struct TrainingRow {
  std::vector<double> features;
  double fitness = 0.0;

  auto operator<=>(const TrainingRow&) const = default;
};

struct TrainingSet {
  std::vector<TrainingRow> rows;

  void add(std::vector<double> features, double fitness) {
    rows.push_back({std::move(features), fitness});
  }

  void validate() const {
    if (rows.empty()) throw InvalidArgument("training set is empty");
    const std::size_t width = rows.front().features.size();
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (rows[i].features.size() != width)
        throw DimensionMismatch("training row " + std::to_string(i) + " has " +
                                std::to_string(rows[i].features.size()) +
                                " features, expected " + std::to_string(width));
      if (!std::isfinite(rows[i].fitness) || rows[i].fitness < 0.0)
        throw ValidationError("training row " + std::to_string(i) +
                              ": fitness must be finite and non-negative");
    }
  }
};

struct BoostParams {
  int rounds = 50;
  int max_depth = 4;
  double learning_rate = 0.3;

  void validate() const {
    if (rounds < 1) throw InvalidArgument("boosting rounds must be >= 1");
    if (max_depth < 1) throw InvalidArgument("tree depth must be >= 1");
    if (!(learning_rate > 0.0 && learning_rate <= 1.0))
      throw InvalidArgument("learning rate must lie in (0, 1]");
  }
};

/// Flat binary regression tree. feature < 0 marks a leaf; rows with
/// x[feature] < threshold go left.
struct RegressionTree {
  std::vector<int> feature;
  std::vector<double> threshold;
  std::vector<int> left;
  std::vector<int> right;
  std::vector<double> value;

  std::size_t size() const noexcept { return feature.size(); }

  double predict(std::span<const double> x) const {
    std::size_t node = 0;
    while (feature[node] >= 0) {
      node = static_cast<std::size_t>(x[static_cast<std::size_t>(feature[node])] <
                                              threshold[node]
                                          ? left[node]
                                          : right[node]);
    }
    return value[node];
  }

  int add_leaf(double v) {
    feature.push_back(-1);
    threshold.push_back(0.0);
    left.push_back(-1);
    right.push_back(-1);
    value.push_back(v);
    return static_cast<int>(feature.size() - 1);
  }

  bool operator==(const RegressionTree&) const = default;
};

struct CostModel {
  std::vector<RegressionTree> trees;
  double base_score = 0.0;
  std::size_t feature_count = 0;

  /// Untrained model: base_score everywhere.
  static CostModel sentinel(std::size_t feature_count, double base_score = 0.0) {
    return CostModel{{}, base_score, feature_count};
  }

  double predict_features(std::span<const double> x) const {
    double out = base_score;
    for (const auto& tree : trees) out += tree.predict(x);
    return out;
  }

  /// Surrogate interface shared with the search agents.
  std::vector<double> predict(const DesignSpace& space,
                              std::span<const Configuration> configs) const {
    if (space.num_knobs() != feature_count)
      throw DimensionMismatch("cost model expects " + std::to_string(feature_count) +
                              " features, space has " + std::to_string(space.num_knobs()) +
                              " knobs");
    std::vector<double> out;
    out.reserve(configs.size());
    for (const auto& c : configs) out.push_back(predict_features(featurize(space, c)));
    return out;
  }

  bool operator==(const CostModel&) const = default;
};

inline std::vector<double> predict(const CostModel& model, const DesignSpace& space,
                                   std::span<const Configuration> configs) {
  return model.predict(space, configs);
}

namespace detail {

struct SplitChoice {
  bool found = false;
  int feature = -1;
  double threshold = 0.0;
  double gain = 0.0;
};

inline SplitChoice best_split(const std::vector<TrainingRow>& rows,
                              const std::vector<double>& residual,
                              const std::vector<std::size_t>& members) {
  SplitChoice best;
  const std::size_t n = members.size();
  if (n < 2) return best;
  double total = 0.0;
  double total_sq = 0.0;
  for (std::size_t m : members) {
    total += residual[m];
    total_sq += residual[m] * residual[m];
  }
  const double parent_term = total * total / static_cast<double>(n);
  const double parent_sse = total_sq - parent_term;
  if (!(parent_sse > 0.0)) return best;
  // Zero-gain splits are allowed: an interaction such as XOR only pays off
  // one level down. Rounding noise below this floor counts as zero.
  const double min_gain = -1e-12 * parent_sse;

  const std::size_t width = rows[members.front()].features.size();
  std::vector<std::size_t> order(members);
  for (std::size_t f = 0; f < width; ++f) {
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return rows[a].features[f] < rows[b].features[f];
    });
    double left_sum = 0.0;
    for (std::size_t i = 0; i + 1 < n; ++i) {
      left_sum += residual[order[i]];
      const double here = rows[order[i]].features[f];
      const double next = rows[order[i + 1]].features[f];
      if (!(here < next)) continue;
      const auto nl = static_cast<double>(i + 1);
      const auto nr = static_cast<double>(n - i - 1);
      const double right_sum = total - left_sum;
      const double gain = left_sum * left_sum / nl + right_sum * right_sum / nr - parent_term;
      // Strict improvement keeps the lowest feature, then the smallest threshold.
      if (gain >= min_gain && (!best.found || gain > best.gain + 1e-12 * parent_sse)) {
        best = {true, static_cast<int>(f), 0.5 * (here + next), gain};
      }
    }
  }
  return best;
}

inline int grow(RegressionTree& tree, const std::vector<TrainingRow>& rows,
                const std::vector<double>& residual, const std::vector<std::size_t>& members,
                int depth, const BoostParams& params) {
  double mean = 0.0;
  for (std::size_t m : members) mean += residual[m];
  mean /= static_cast<double>(members.size());

  const SplitChoice split =
      depth < params.max_depth ? best_split(rows, residual, members) : SplitChoice{};
  if (!split.found) return tree.add_leaf(params.learning_rate * mean);

  const int node = tree.add_leaf(0.0);
  tree.feature[static_cast<std::size_t>(node)] = split.feature;
  tree.threshold[static_cast<std::size_t>(node)] = split.threshold;
  std::vector<std::size_t> lhs, rhs;
  for (std::size_t m : members)
    (rows[m].features[static_cast<std::size_t>(split.feature)] < split.threshold ? lhs : rhs)
        .push_back(m);
  const int l = grow(tree, rows, residual, lhs, depth + 1, params);
  const int r = grow(tree, rows, residual, rhs, depth + 1, params);
  tree.left[static_cast<std::size_t>(node)] = l;
  tree.right[static_cast<std::size_t>(node)] = r;
  return node;
}

}  // namespace detail

/// Gradient-boosted regression trees under squared-error loss.
///
/// Rows are put in a canonical order before fitting, so the result depends on
/// the training multiset only. The seed is reserved for row/feature
/// subsampling, which the default parameters do not use.
inline CostModel fit(const TrainingSet& training, const BoostParams& params = {},
                     std::uint64_t seed = 0) {
  (void)seed;
  training.validate();
  params.validate();

  std::vector<TrainingRow> rows = training.rows;
  std::sort(rows.begin(), rows.end());

  CostModel model;
  model.feature_count = rows.front().features.size();
  double mean = 0.0;
  for (const auto& r : rows) mean += r.fitness;
  model.base_score = mean / static_cast<double>(rows.size());

  std::vector<double> residual(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) residual[i] = rows[i].fitness - model.base_score;
  std::vector<std::size_t> all(rows.size());
  std::iota(all.begin(), all.end(), std::size_t{0});

  for (int round = 0; round < params.rounds; ++round) {
    RegressionTree tree;
    detail::grow(tree, rows, residual, all, 0, params);
    for (std::size_t i = 0; i < rows.size(); ++i) residual[i] -= tree.predict(rows[i].features);
    model.trees.push_back(std::move(tree));
  }
  return model;
}

inline double training_rmse(const CostModel& model, const TrainingSet& training) {
  double sse = 0.0;
  for (const auto& r : training.rows) {
    const double e = model.predict_features(r.features) - r.fitness;
    sse += e * e;
  }
  return std::sqrt(sse / static_cast<double>(training.rows.size()));
}

inline nlohmann::ordered_json to_json(const CostModel& model) {
  nlohmann::ordered_json doc;
  doc["base_score"] = model.base_score;
  doc["feature_count"] = model.feature_count;
  doc["trees"] = nlohmann::ordered_json::array();
  for (const auto& t : model.trees) {
    doc["trees"].push_back({{"feature", t.feature},
                            {"threshold", t.threshold},
                            {"left", t.left},
                            {"right", t.right},
                            {"value", t.value}});
  }
  return doc;
}

inline CostModel cost_model_from_json(const nlohmann::json& doc) {
  try {
    CostModel model;
    model.base_score = doc.at("base_score").get<double>();
    model.feature_count = doc.at("feature_count").get<std::size_t>();
    for (const auto& t : doc.at("trees")) {
      RegressionTree tree;
      tree.feature = t.at("feature").get<std::vector<int>>();
      tree.threshold = t.at("threshold").get<std::vector<double>>();
      tree.left = t.at("left").get<std::vector<int>>();
      tree.right = t.at("right").get<std::vector<int>>();
      tree.value = t.at("value").get<std::vector<double>>();
      const std::size_t n = tree.feature.size();
      if (n == 0 || tree.threshold.size() != n || tree.left.size() != n ||
          tree.right.size() != n || tree.value.size() != n)
        throw ParseError("cost model: inconsistent tree arrays");
      for (std::size_t i = 0; i < n; ++i) {
        if (tree.feature[i] < 0) continue;
        if (static_cast<std::size_t>(tree.feature[i]) >= model.feature_count ||
            tree.left[i] <= static_cast<int>(i) || tree.right[i] <= static_cast<int>(i) ||
            static_cast<std::size_t>(tree.left[i]) >= n ||
            static_cast<std::size_t>(tree.right[i]) >= n)
          throw ParseError("cost model: malformed tree node " + std::to_string(i));
      }
      model.trees.push_back(std::move(tree));
    }
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("cost model: ") + e.what());
  }
}

}  // namespace knobtuner
