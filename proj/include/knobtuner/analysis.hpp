#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "knobtuner/adaptive_sampler.hpp"
#include "knobtuner/design_space.hpp"
#include "knobtuner/driver.hpp"
#include "knobtuner/errors.hpp"
#include "knobtuner/measurement.hpp"
#include "knobtuner/metrics.hpp"

namespace knobtuner {

/// One finished tuning run as read back from its log and summary.
struct RunData {
  std::string strategy;
  std::string task_key;  // runs compared against each other must share it
  std::vector<MeasurementRecord> records;
  std::vector<RoundStats> round_stats;
  double wall_time_s = 0.0;
};

struct ExperimentMetrics {
  std::vector<std::size_t> steps_to_convergence;  // rounds 1.., round 0 has no search
  std::size_t measurements = 0;
  Curve curve;
  std::optional<double> optimality_gap;
};

inline ExperimentMetrics experiment_metrics(const RunData& run, std::optional<double> oracle_runtime = {}) {
  ExperimentMetrics m;
  for (const auto& s : run.round_stats)
    if (s.round > 0) m.steps_to_convergence.push_back(s.steps_to_convergence);
  m.measurements = run.records.size();
  m.curve = best_so_far_curve(run.records);
  if (oracle_runtime && !m.curve.all_failed)
    m.optimality_gap = (1.0 / m.curve.points.back().best_fitness) / *oracle_runtime - 1.0;
  return m;
}

struct ComparisonRow {
  std::string strategy;
  std::size_t measurements = 0;
  double wall_time_s = 0.0;
  double best_fitness = 0.0;
  std::optional<double> optimality_gap;
  std::optional<std::size_t> measurements_to_10pct;  // unset: never reached, or no oracle
  double mean_steps_to_convergence = 0.0;
  long long delta_measurements = 0;  // against the first row
  double delta_best_fitness = 0.0;
};

struct ComparisonTable {
  std::vector<ComparisonRow> rows;
  std::optional<double> oracle_runtime;
};

inline ComparisonTable compare_runs(std::span<const RunData> runs, std::optional<double> oracle_runtime = {}) {
  if (runs.size() < 2) throw InvalidArgument("compare_runs: need at least two runs of the same task");
  for (const auto& r : runs)
    if (r.task_key != runs.front().task_key)
      throw InvalidArgument("compare_runs: run '" + r.strategy + "' belongs to a different task");
  ComparisonTable table;
  table.oracle_runtime = oracle_runtime;
  for (const auto& run : runs) {
    const ExperimentMetrics m = experiment_metrics(run, oracle_runtime);
    ComparisonRow row;
    row.strategy = run.strategy;
    row.measurements = m.measurements;
    row.wall_time_s = run.wall_time_s;
    row.best_fitness = m.curve.all_failed ? 0.0 : m.curve.points.back().best_fitness;
    row.optimality_gap = m.optimality_gap;
    if (oracle_runtime) {
      const std::size_t reach = measurements_to_reach(run.records, *oracle_runtime, 0.10);
      if (reach > 0) row.measurements_to_10pct = reach;
    }
    if (!m.steps_to_convergence.empty()) {
      double sum = 0.0;
      for (auto s : m.steps_to_convergence) sum += static_cast<double>(s);
      row.mean_steps_to_convergence = sum / static_cast<double>(m.steps_to_convergence.size());
    }
    table.rows.push_back(std::move(row));
  }
  for (auto& row : table.rows) {
    row.delta_measurements =
        static_cast<long long>(row.measurements) - static_cast<long long>(table.rows.front().measurements);
    row.delta_best_fitness = row.best_fitness - table.rows.front().best_fitness;
  }
  return table;
}

namespace detail {

inline std::string number(double v, int digits = 10) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, v);
  return buf;
}

inline std::vector<std::vector<std::string>> comparison_cells(const ComparisonTable& table) {
  std::vector<std::vector<std::string>> cells;
  cells.push_back({"strategy", "measurements", "wall_time_s", "best_fitness", "optimality_gap",
                   "measurements_to_10pct", "mean_steps_to_convergence", "delta_measurements",
                   "delta_best_fitness"});
  for (const auto& r : table.rows) {
    cells.push_back({r.strategy, std::to_string(r.measurements), number(r.wall_time_s, 4), number(r.best_fitness),
                     r.optimality_gap ? number(*r.optimality_gap, 6) : "",
                     r.measurements_to_10pct ? std::to_string(*r.measurements_to_10pct) : "",
                     number(r.mean_steps_to_convergence, 6), std::to_string(r.delta_measurements),
                     number(r.delta_best_fitness)});
  }
  return cells;
}

}  // namespace detail

inline constexpr const char* kComparisonSchema = "# knobtuner comparison v1";
inline constexpr const char* kCurveSchema = "# knobtuner curve v1";
inline constexpr const char* kProjectionSchema = "# knobtuner projection v1";

inline std::string comparison_csv(const ComparisonTable& table) {
  std::string out = std::string(kComparisonSchema) + "\n";
  for (const auto& line : detail::comparison_cells(table)) {
    for (std::size_t i = 0; i < line.size(); ++i) out += (i ? "," : "") + line[i];
    out += '\n';
  }
  return out;
}

inline std::string comparison_text(const ComparisonTable& table) {
  const auto cells = detail::comparison_cells(table);
  std::vector<std::size_t> width(cells.front().size(), 0);
  for (const auto& line : cells)
    for (std::size_t i = 0; i < line.size(); ++i) width[i] = std::max(width[i], line[i].size());
  std::string out;
  for (const auto& line : cells) {
    for (std::size_t i = 0; i < line.size(); ++i) {
      if (i) out += "  ";
      out += line[i];
      if (i + 1 < line.size()) out.append(width[i] - line[i].size(), ' ');
    }
    out += '\n';
  }
  return out;
}

inline std::string curve_csv(const Curve& curve) {
  std::string out = std::string(kCurveSchema) + "\nmeasurement,best_fitness\n";
  for (const auto& p : curve.points) out += std::to_string(p.measurement) + "," + detail::number(p.best_fitness) + "\n";
  return out;
}

// ---------------------------------------------------------------------------
// Two-component PCA by power iteration with deflation.

using Point2 = std::array<double, 2>;

namespace detail {

using Matrix = std::vector<std::vector<double>>;

inline std::vector<double> multiply(const Matrix& m, const std::vector<double>& v) {
  std::vector<double> out(v.size(), 0.0);
  for (std::size_t i = 0; i < m.size(); ++i)
    for (std::size_t j = 0; j < v.size(); ++j) out[i] += m[i][j] * v[j];
  return out;
}

inline double norm(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

inline void orient(std::vector<double>& v) {
  for (double x : v) {
    if (std::abs(x) <= 1e-12) continue;
    if (x < 0.0)
      for (double& y : v) y = -y;
    return;
  }
}

/// Dominant eigenvector of a symmetric PSD matrix; empty when the matrix is ~0.
inline std::vector<double> power_iteration(const Matrix& m, double tolerance, int max_iterations) {
  const std::size_t d = m.size();
  std::size_t start = 0;
  double start_norm = -1.0;
  for (std::size_t j = 0; j < d; ++j) {
    double s = 0.0;
    for (std::size_t i = 0; i < d; ++i) s += m[i][j] * m[i][j];
    if (s > start_norm) {
      start_norm = s;
      start = j;
    }
  }
  if (!(start_norm > 1e-24)) return {};
  std::vector<double> v(d);
  for (std::size_t i = 0; i < d; ++i) v[i] = m[i][start];
  double n = norm(v);
  for (double& x : v) x /= n;
  for (int it = 0; it < max_iterations; ++it) {
    std::vector<double> next = multiply(m, v);
    n = norm(next);
    if (!(n > 1e-300)) return {};
    for (double& x : next) x /= n;
    double diff = 0.0;
    for (std::size_t i = 0; i < d; ++i) diff = std::max(diff, std::abs(next[i] - v[i]));
    v = std::move(next);
    if (diff < tolerance) break;
  }
  return v;
}

}  // namespace detail

/// Projects centered points onto their top two principal components. Each
/// component's first nonzero loading is positive.
inline std::vector<Point2> pca_project(const std::vector<Point>& points, double tolerance = 1e-9,
                                       int max_iterations = 1000) {
  if (points.size() < 2) throw InvalidArgument("pca_project: need at least two points");
  const std::size_t d = points.front().size();
  if (d < 2) throw InvalidArgument("pca_project: need at least two dimensions");
  for (const auto& p : points)
    if (p.size() != d) throw DimensionMismatch("pca_project: points differ in width");

  std::vector<double> mean(d, 0.0);
  for (const auto& p : points)
    for (std::size_t j = 0; j < d; ++j) mean[j] += p[j];
  for (double& m : mean) m /= static_cast<double>(points.size());
  std::vector<Point> centered = points;
  for (auto& p : centered)
    for (std::size_t j = 0; j < d; ++j) p[j] -= mean[j];

  detail::Matrix cov(d, std::vector<double>(d, 0.0));
  for (const auto& p : centered)
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = 0; j < d; ++j) cov[i][j] += p[i] * p[j];
  double trace = 0.0;
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = 0; j < d; ++j) cov[i][j] /= static_cast<double>(points.size());
    trace += cov[i][i];
  }
  if (!(trace > 1e-24)) throw InvalidArgument("pca_project: degenerate variance (all points coincide)");

  std::vector<double> first = detail::power_iteration(cov, tolerance, max_iterations);
  detail::orient(first);
  const std::vector<double> cv = detail::multiply(cov, first);
  double lambda = 0.0;
  for (std::size_t i = 0; i < d; ++i) lambda += first[i] * cv[i];
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j) cov[i][j] -= lambda * first[i] * first[j];

  std::vector<double> second = detail::power_iteration(cov, tolerance, max_iterations);
  if (second.empty()) {
    // Rank one: any unit vector orthogonal to the first component will do.
    double best = -1.0;
    for (std::size_t axis = 0; axis < d; ++axis) {
      std::vector<double> e(d, 0.0);
      e[axis] = 1.0;
      for (std::size_t i = 0; i < d; ++i) e[i] -= first[axis] * first[i];
      const double n = detail::norm(e);
      if (n > best) {
        best = n;
        second = e;
      }
    }
    for (double& x : second) x /= best;
  }
  detail::orient(second);

  std::vector<Point2> out;
  out.reserve(points.size());
  for (const auto& p : centered) {
    Point2 q{0.0, 0.0};
    for (std::size_t j = 0; j < d; ++j) {
      q[0] += p[j] * first[j];
      q[1] += p[j] * second[j];
    }
    out.push_back(q);
  }
  return out;
}

inline std::vector<Point2> pca_project(std::span<const Configuration> configs) {
  std::vector<Point> points;
  points.reserve(configs.size());
  for (const auto& c : configs) points.emplace_back(c.indices.begin(), c.indices.end());
  return pca_project(points);
}

struct ProjectionRow {
  std::string strategy;
  std::size_t measurement = 0;
  Point2 xy{};
  double fitness = 0.0;
};

inline std::string projection_csv(std::span<const ProjectionRow> rows) {
  std::string out = std::string(kProjectionSchema) + "\nstrategy,measurement,pc1,pc2,fitness\n";
  for (const auto& r : rows)
    out += r.strategy + "," + std::to_string(r.measurement) + "," + detail::number(r.xy[0]) + "," +
           detail::number(r.xy[1]) + "," + detail::number(r.fitness) + "\n";
  return out;
}

}  // namespace knobtuner
