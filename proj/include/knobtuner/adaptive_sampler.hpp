#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <set>
#include <span>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "knobtuner/design_space.hpp"
#include "knobtuner/errors.hpp"
#include "knobtuner/random.hpp"
#include "knobtuner/rl_agent.hpp"

namespace knobtuner {

/// Configurations already sent to a measurement backend.
class VisitedSet {
 public:
  bool insert(const Configuration& c) { return set_.insert(c).second; }
  bool contains(const Configuration& c) const { return set_.contains(c); }
  std::size_t size() const noexcept { return set_.size(); }
  bool empty() const noexcept { return set_.empty(); }

 private:
  std::unordered_set<Configuration, ConfigurationHash> set_;
};

using Point = std::vector<double>;

struct ClusteringResult {
  std::vector<Point> centroids;
  std::vector<std::size_t> assignment;  // point index -> centroid index
  double loss = 0.0;                    // sum of squared distances to assigned centroid
  std::vector<double> loss_history;     // loss after each assignment step
  int iterations = 0;
};

namespace detail {

inline double squared_distance(std::span<const double> a, std::span<const double> b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d += (a[i] - b[i]) * (a[i] - b[i]);
  return d;
}

inline std::size_t nearest(const Point& p, const std::vector<Point>& centroids, double* dist = nullptr) {
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < centroids.size(); ++c) {
    const double d = squared_distance(p, centroids[c]);
    if (d < best_d) {
      best_d = d;
      best = c;
    }
  }
  if (dist) *dist = best_d;
  return best;
}

inline std::size_t count_distinct(const std::vector<Point>& points) {
  std::set<Point> distinct(points.begin(), points.end());
  return distinct.size();
}

inline void check_points(const std::vector<Point>& points) {
  if (points.empty()) throw InvalidArgument("kmeans: no points");
  for (const auto& p : points)
    if (p.size() != points.front().size()) throw DimensionMismatch("kmeans: points differ in width");
}

}  // namespace detail

/// Lloyd iterations from given centroids: stops when the assignment is
/// unchanged or after `max_iterations` assignment steps. An empty cluster is
/// re-seeded at the point farthest from its current centroid.
inline ClusteringResult lloyd(const std::vector<Point>& points, std::span<const double> weights,
                              std::vector<Point> centroids, int max_iterations = 100) {
  detail::check_points(points);
  const std::size_t n = points.size();
  if (weights.size() != n) throw DimensionMismatch("kmeans: one weight per point required");
  const std::size_t k = centroids.size();
  const std::size_t width = points.front().size();
  ClusteringResult out;
  std::vector<std::size_t> assignment(n, k);
  std::vector<double> dist(n, 0.0);

  for (int iter = 0; iter < max_iterations; ++iter) {
    bool changed = false;
    double loss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t c = detail::nearest(points[i], centroids, &dist[i]);
      changed |= c != assignment[i];
      assignment[i] = c;
      loss += weights[i] * dist[i];
    }
    out.loss_history.push_back(loss);
    out.loss = loss;
    out.iterations = iter + 1;
    if (!changed) break;
    if (iter + 1 == max_iterations) break;

    std::vector<Point> sums(k, Point(width, 0.0));
    std::vector<double> counts(k, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      counts[assignment[i]] += weights[i];
      for (std::size_t j = 0; j < width; ++j) sums[assignment[i]][j] += weights[i] * points[i][j];
    }
    std::vector<bool> taken(n, false);
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] > 0.0) {
        for (std::size_t j = 0; j < width; ++j) centroids[c][j] = sums[c][j] / counts[c];
        continue;
      }
      std::size_t far = n;
      for (std::size_t i = 0; i < n; ++i)
        if (!taken[i] && dist[i] > 0.0 && (far == n || weights[i] * dist[i] > weights[far] * dist[far])) far = i;
      if (far == n) continue;
      taken[far] = true;
      centroids[c] = points[far];
    }
  }
  out.centroids = std::move(centroids);
  out.assignment = std::move(assignment);
  return out;
}

inline ClusteringResult lloyd(const std::vector<Point>& points, std::vector<Point> centroids,
                              int max_iterations = 100) {
  const std::vector<double> unit(points.size(), 1.0);
  return lloyd(points, unit, std::move(centroids), max_iterations);
}

/// Lloyd's algorithm from a seeded k-means++ initialization. A weight acts as
/// the multiplicity of its point; weights must be positive.
inline ClusteringResult kmeans(const std::vector<Point>& points, std::span<const double> weights,
                               std::size_t k, std::uint64_t seed) {
  detail::check_points(points);
  if (weights.size() != points.size()) throw DimensionMismatch("kmeans: one weight per point required");
  for (double w : weights)
    if (!(w > 0.0) || !std::isfinite(w)) throw InvalidArgument("kmeans: weights must be positive and finite");
  const std::size_t distinct = detail::count_distinct(points);
  if (k < 1 || k > distinct)
    throw InvalidArgument("kmeans: k = " + std::to_string(k) + " outside [1, " + std::to_string(distinct) +
                          "] (distinct points)");
  Rng rng(seed);
  std::vector<Point> centroids;
  centroids.push_back(points[rng.categorical(weights)]);
  std::vector<double> d2(points.size());
  while (centroids.size() < k) {
    for (std::size_t i = 0; i < points.size(); ++i) {
      detail::nearest(points[i], centroids, &d2[i]);
      d2[i] *= weights[i];
    }
    centroids.push_back(points[rng.categorical(d2)]);
  }
  return lloyd(points, weights, std::move(centroids));
}

inline ClusteringResult kmeans(const std::vector<Point>& points, std::size_t k, std::uint64_t seed) {
  const std::vector<double> unit(points.size(), 1.0);
  return kmeans(points, unit, k, seed);
}

/// Per knob, the most frequent index over the trajectory; ties go to the smaller index.
inline Configuration mode_config(const Trajectory& trajectory, const DesignSpace& space) {
  if (trajectory.empty()) throw InvalidArgument("mode_config: empty trajectory");
  Configuration out;
  out.indices.resize(space.num_knobs());
  for (std::size_t knob = 0; knob < space.num_knobs(); ++knob) {
    std::vector<std::size_t> counts(space.cardinality(knob), 0);
    for (const auto& c : trajectory.configs) {
      space.check(c);
      ++counts[c[knob]];
    }
    out.indices[knob] = static_cast<std::size_t>(
        std::max_element(counts.begin(), counts.end()) - counts.begin());
  }
  return out;
}

/// Nearest lattice index per knob, halves rounded up, clamped to the knob range.
inline Configuration round_to_config(std::span<const double> centroid, const DesignSpace& space) {
  if (centroid.size() != space.num_knobs())
    throw DimensionMismatch("centroid has " + std::to_string(centroid.size()) + " entries, space has " +
                            std::to_string(space.num_knobs()) + " knobs");
  Configuration out;
  out.indices.resize(centroid.size());
  for (std::size_t i = 0; i < centroid.size(); ++i) {
    const double top = static_cast<double>(space.cardinality(i) - 1);
    const double r = std::clamp(std::floor(centroid[i] + 0.5), 0.0, top);
    out.indices[i] = static_cast<std::size_t>(r);
  }
  return out;
}

struct AdaptiveSamplerOptions {
  double knee_constant = 1.1;
  std::size_t min_k = 8;
  std::size_t max_k = 63;

  void validate() const {
    if (!(knee_constant >= 1.0) || !std::isfinite(knee_constant))
      throw InvalidArgument("knee_constant must be finite and >= 1");
    if (min_k < 1 || max_k < min_k) throw InvalidArgument("adaptive sampler k range is empty");
  }
};

struct SampleBatch {
  std::vector<Configuration> configs;
  std::size_t distinct_inputs = 0;
  std::size_t chosen_k = 0;               // 0 when clustering was bypassed
  std::vector<double> loss_by_k;          // losses for k = min_k, min_k + 1, ...
  std::size_t replaced = 0;               // centroids found in the visited set
};

/// Clusters the trajectory (each distinct configuration weighted by how often
/// the search visited it), scanning k upward until
/// knee_constant * Loss(k) exceeds Loss(k - 1), and maps the centroids back to
/// lattice points. Visited centroids are swapped for the trajectory's mode
/// configuration; a mode that is visited or already present is dropped.
inline SampleBatch adaptive_sample(const Trajectory& trajectory, const VisitedSet& visited,
                                   const DesignSpace& space, std::uint64_t seed,
                                   const AdaptiveSamplerOptions& options = {}) {
  options.validate();
  if (trajectory.empty()) throw InvalidArgument("adaptive_sample: empty trajectory");

  std::vector<Configuration> distinct;
  std::vector<double> weights;
  {
    std::unordered_map<Configuration, std::size_t, ConfigurationHash> slot;
    for (const auto& c : trajectory.configs) {
      space.check(c);
      auto [it, fresh] = slot.try_emplace(c, distinct.size());
      if (fresh) {
        distinct.push_back(c);
        weights.push_back(0.0);
      }
      weights[it->second] += 1.0;
    }
  }
  SampleBatch batch;
  batch.distinct_inputs = distinct.size();
  if (distinct.size() <= options.min_k) {
    for (const auto& c : distinct)
      if (!visited.contains(c)) batch.configs.push_back(c);
    return batch;
  }

  std::vector<Point> points;
  points.reserve(distinct.size());
  for (const auto& c : distinct) points.emplace_back(c.indices.begin(), c.indices.end());

  const std::size_t top_k = std::min(options.max_k, distinct.size());
  ClusteringResult current;
  double previous_loss = std::numeric_limits<double>::infinity();
  for (std::size_t k = options.min_k; k <= top_k; ++k) {
    ClusteringResult fresh = kmeans(points, weights, k, derive_seed(seed, k));
    if (k > options.min_k) {
      // Warm start from the previous solution plus the worst-served point, so
      // Loss(k) can never exceed Loss(k - 1).
      std::vector<Point> init = current.centroids;
      std::size_t far = 0;
      double far_d = -1.0;
      for (std::size_t i = 0; i < points.size(); ++i) {
        double d = 0.0;
        detail::nearest(points[i], init, &d);
        d *= weights[i];
        if (d > far_d) {
          far_d = d;
          far = i;
        }
      }
      init.push_back(points[far]);
      ClusteringResult warm = lloyd(points, weights, std::move(init));
      if (warm.loss < fresh.loss) fresh = std::move(warm);
    }
    current = std::move(fresh);
    batch.loss_by_k.push_back(current.loss);
    batch.chosen_k = k;
    if (options.knee_constant * current.loss > previous_loss) break;
    previous_loss = current.loss;
  }

  std::unordered_set<Configuration, ConfigurationHash> emitted;
  const Configuration mode = mode_config(trajectory, space);
  for (const auto& centroid : current.centroids) {
    Configuration c = round_to_config(centroid, space);
    if (visited.contains(c)) {
      ++batch.replaced;
      c = mode;
      if (visited.contains(c)) continue;
    }
    if (emitted.insert(c).second) batch.configs.push_back(std::move(c));
  }
  return batch;
}

}  // namespace knobtuner
