#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "knobtuner/errors.hpp"
#include "knobtuner/measurement.hpp"

namespace knobtuner {

/// Steps until a round's best score stops improving for `window` consecutive
/// steps: the index of the last improvement before the first such stall (or
/// before the end of the sequence). Index 0 holds the score of the starts.
inline std::size_t steps_to_convergence(std::span<const double> best_by_step, std::size_t window = 8) {
  if (best_by_step.empty()) return 0;
  std::size_t last_improvement = 0;
  double best = best_by_step[0];
  std::size_t stall = 0;
  for (std::size_t t = 1; t < best_by_step.size(); ++t) {
    if (best_by_step[t] > best) {
      best = best_by_step[t];
      last_improvement = t;
      stall = 0;
    } else if (++stall >= window) {
      break;
    }
  }
  return last_improvement;
}

struct CurvePoint {
  std::size_t measurement = 0;  // 1-based position in the log
  double best_fitness = 0.0;

  bool operator==(const CurvePoint&) const = default;
};

struct Curve {
  std::vector<CurvePoint> points;
  bool all_failed = false;  // set when no record succeeded; points is then empty
};

/// Prefix-best fitness over the log, from the first successful measurement on.
inline Curve best_so_far_curve(std::span<const MeasurementRecord> log) {
  if (log.empty()) throw InvalidArgument("best_so_far_curve: empty log");
  Curve curve;
  double best_runtime = kFailedRuntime;
  for (std::size_t i = 0; i < log.size(); ++i) {
    if (!log[i].failed && log[i].runtime_s < best_runtime) best_runtime = log[i].runtime_s;
    if (best_runtime < kFailedRuntime) curve.points.push_back({i + 1, 1.0 / best_runtime});
  }
  curve.all_failed = curve.points.empty();
  return curve;
}

/// 1-based count of measurements until the first runtime within `tolerance`
/// (relative) of `oracle_runtime`; 0 when never reached.
inline std::size_t measurements_to_reach(std::span<const MeasurementRecord> log, double oracle_runtime,
                                         double tolerance) {
  for (std::size_t i = 0; i < log.size(); ++i)
    if (!log[i].failed && log[i].runtime_s <= oracle_runtime * (1.0 + tolerance)) return i + 1;
  return 0;
}

}  // namespace knobtuner
