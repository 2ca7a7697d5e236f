#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_set>
#include <utility>
#include <vector>

#include "knobtuner/adaptive_sampler.hpp"
#include "knobtuner/cost_model.hpp"
#include "knobtuner/design_space.hpp"
#include "knobtuner/errors.hpp"
#include "knobtuner/measurement.hpp"
#include "knobtuner/metrics.hpp"
#include "knobtuner/random.hpp"
#include "knobtuner/rl_agent.hpp"
#include "knobtuner/sa_search.hpp"

namespace knobtuner {

enum class Strategy { RlAs, Rl, SaAs, Sa, Random };

inline std::string_view to_string(Strategy s) {
  switch (s) {
    case Strategy::RlAs: return "rl+as";
    case Strategy::Rl: return "rl";
    case Strategy::SaAs: return "sa+as";
    case Strategy::Sa: return "sa";
    case Strategy::Random: return "random";
  }
  return "?";
}

inline Strategy parse_strategy(std::string_view text) {
  for (Strategy s : {Strategy::RlAs, Strategy::Rl, Strategy::SaAs, Strategy::Sa, Strategy::Random})
    if (to_string(s) == text) return s;
  throw InvalidArgument("unknown strategy '" + std::string(text) + "' (expected rl+as, rl, sa+as, sa or random)");
}

inline bool uses_rl(Strategy s) { return s == Strategy::RlAs || s == Strategy::Rl; }
inline bool uses_sa(Strategy s) { return s == Strategy::SaAs || s == Strategy::Sa; }
inline bool uses_adaptive_sampling(Strategy s) { return s == Strategy::RlAs || s == Strategy::SaAs; }

struct TuningTask {
  explicit TuningTask(DesignSpace s) : space(std::move(s)) {}

  DesignSpace space;
  Strategy strategy = Strategy::RlAs;
  std::int64_t budget = 1000;
  std::uint64_t seed = 0;
  AgentHyperparams agent;
  SAParams sa;
  BoostParams boost;
  AdaptiveSamplerOptions sampler;
  std::size_t greedy_batch = 64;
  std::size_t convergence_window = 8;

  void validate() const {
    if (budget < 1) throw InvalidArgument("budget must be >= 1");
    if (greedy_batch < 1) throw InvalidArgument("greedy batch size must be >= 1");
    agent.validate();
    sa.validate();
    boost.validate();
    sampler.validate();
  }
};

struct RoundStats {
  std::int64_t round = 0;
  std::size_t search_steps = 0;          // agent transitions or SA proposals
  std::size_t steps_to_convergence = 0;  // lockstep steps, see steps_to_convergence
  std::size_t trajectory_size = 0;
  std::size_t batch_size = 0;
  std::size_t chosen_k = 0;
  double round_best_score = 0.0;
};

struct TuningResult {
  Configuration best_config;
  double best_runtime_s = kFailedRuntime;
  std::int64_t measurements_used = 0;
  std::int64_t rounds = 0;
  std::string log_path;
  std::vector<MeasurementRecord> records;
  std::vector<RoundStats> round_stats;
};

struct TuneHooks {
  MeasurementLog* log = nullptr;
  Clock clock = fixed_clock();
  std::function<void(const RoundStats&)> on_round;
};

namespace detail {

using ConfigSet = std::unordered_set<Configuration, ConfigurationHash>;

/// Up to `count` distinct configurations absent from `visited` and `taken`.
inline std::vector<Configuration> random_unvisited(const DesignSpace& space, const VisitedSet& visited,
                                                   std::size_t count, Rng& rng, ConfigSet taken = {}) {
  std::vector<Configuration> out;
  const std::uint64_t total = space.total_cardinality();
  std::size_t tries = 0;
  while (out.size() < count && tries < 64 * count + 64) {
    ++tries;
    Configuration c = space.random_config(rng);
    if (visited.contains(c) || taken.contains(c)) continue;
    taken.insert(c);
    out.push_back(std::move(c));
  }
  if (out.size() < count && total <= kDefaultEnumerationCap) {
    std::vector<Configuration> rest;
    for (const auto& c : enumerate_space(space))
      if (!visited.contains(c) && !taken.contains(c)) rest.push_back(c);
    while (out.size() < count && !rest.empty()) {
      const std::size_t pick = rng.below(rest.size());
      std::swap(rest[pick], rest.back());
      out.push_back(std::move(rest.back()));
      rest.pop_back();
    }
  }
  return out;
}

/// Distinct configurations of `candidates` ranked by descending score (stable).
inline std::vector<Configuration> top_distinct(std::span<const Configuration> candidates,
                                               std::span<const double> scores, std::size_t count,
                                               const VisitedSet* exclude) {
  std::vector<std::size_t> order(candidates.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  ConfigSet seen;
  std::vector<Configuration> out;
  for (std::size_t i : order) {
    if (out.size() >= count) break;
    const auto& c = candidates[i];
    if (exclude && exclude->contains(c)) continue;
    if (seen.insert(c).second) out.push_back(c);
  }
  return out;
}

inline CostModel fit_on_records(const DesignSpace& space, std::span<const MeasurementRecord> records,
                                const BoostParams& params, std::uint64_t seed) {
  TrainingSet training;
  for (const auto& r : records)
    if (!r.failed) training.add(featurize(space, r.config), r.fitness);
  if (training.rows.empty()) return CostModel::sentinel(space.num_knobs());
  return fit(training, params, seed);
}

}  // namespace detail

/// The measure / refit / search / sample loop under a measurement budget.
/// Round 0 measures random configurations; every later round refits the cost
/// model, runs the strategy's search from the best known configurations and
/// measures a batch chosen by adaptive sampling or by greedy top-k.
inline TuningResult tune(const TuningTask& task, MeasurementBackend& backend, const TuneHooks& hooks = {}) {
  task.validate();
  const DesignSpace& space = task.space;
  const auto per_round = static_cast<std::size_t>(task.agent.episodes_per_round);
  const std::uint64_t total = space.total_cardinality();

  TuningResult result;
  if (hooks.log) result.log_path = hooks.log->path();
  VisitedSet visited;
  Rng rng(derive_seed(task.seed, 0xd21e7ULL));

  auto remaining = [&] { return static_cast<std::size_t>(task.budget - result.measurements_used); };
  auto measure = [&](std::vector<Configuration> batch) {
    if (batch.size() > remaining()) batch.resize(remaining());
    if (batch.empty()) return std::size_t{0};
    auto records = measure_batch(backend, space, batch, result.rounds, hooks.log, hooks.clock);
    for (auto& r : records) {
      visited.insert(r.config);
      result.records.push_back(std::move(r));
    }
    result.measurements_used += static_cast<std::int64_t>(batch.size());
    return batch.size();
  };

  // Round 0: bootstrap with random measurements.
  measure(detail::random_unvisited(space, visited, per_round, rng));
  RoundStats bootstrap;
  bootstrap.batch_size = result.records.size();
  result.round_stats.push_back(bootstrap);
  if (hooks.on_round) hooks.on_round(bootstrap);
  result.rounds = 1;

  std::optional<Agent> agent;
  if (uses_rl(task.strategy)) agent = init_agent(space, task.agent, derive_seed(task.seed, 0xa9e47ULL));
  Trajectory previous;

  while (remaining() > 0 && visited.size() < total) {
    const std::int64_t round = result.rounds;
    const std::uint64_t round_seed = derive_seed(task.seed, static_cast<std::uint64_t>(round));
    RoundStats stats;
    stats.round = round;
    std::vector<Configuration> batch;

    if (task.strategy == Strategy::Random) {
      batch = detail::random_unvisited(space, visited, task.greedy_batch, rng);
    } else {
      const CostModel model = detail::fit_on_records(space, result.records, task.boost, round_seed);

      std::vector<Configuration> starts;
      if (previous.empty()) {
        for (std::size_t i = 0; i < per_round; ++i) starts.push_back(space.random_config(rng));
      } else {
        std::vector<Configuration> pool;
        std::vector<double> pool_scores;
        for (const auto& r : result.records)
          if (!r.failed) {
            pool.push_back(r.config);
            pool_scores.push_back(r.fitness);
          }
        const auto predicted = model.predict(space, previous.configs);
        pool.insert(pool.end(), previous.configs.begin(), previous.configs.end());
        pool_scores.insert(pool_scores.end(), predicted.begin(), predicted.end());
        starts = detail::top_distinct(pool, pool_scores, per_round, nullptr);
        if (starts.empty()) starts.push_back(space.random_config(rng));
      }

      Trajectory trajectory;
      std::vector<double> best_by_step;
      if (uses_rl(task.strategy)) {
        SearchOutcome out = run_search_round(*agent, model, space, starts);
        stats.search_steps = out.steps;
        trajectory = std::move(out.trajectory);
        best_by_step = std::move(out.best_by_step);
      } else {
        SAParams sa = task.sa;
        SAOutcome out = run_sa_round(sa, model, space, starts, round_seed);
        stats.search_steps = out.proposals;
        trajectory = std::move(out.trajectory);
        best_by_step = std::move(out.best_by_step);
      }
      stats.steps_to_convergence = steps_to_convergence(best_by_step, task.convergence_window);
      stats.trajectory_size = trajectory.size();
      stats.round_best_score = best_by_step.empty() ? 0.0 : best_by_step.back();

      if (uses_adaptive_sampling(task.strategy)) {
        SampleBatch sampled = adaptive_sample(trajectory, visited, space, round_seed, task.sampler);
        stats.chosen_k = sampled.chosen_k;
        batch = std::move(sampled.configs);
        // Measure the most promising centroids first when the budget truncates.
        const auto scores = model.predict(space, batch);
        batch = detail::top_distinct(batch, scores, batch.size(), nullptr);
      } else {
        batch = detail::top_distinct(trajectory.configs, trajectory.scores, task.greedy_batch, &visited);
      }
      if (batch.empty()) {
        // Everything the search produced is already measured: explore instead.
        batch = detail::random_unvisited(space, visited, std::min<std::size_t>(task.sampler.min_k, task.greedy_batch),
                                         rng);
      }
      previous = std::move(trajectory);
    }

    stats.batch_size = measure(std::move(batch));
    result.rounds += 1;
    result.round_stats.push_back(stats);
    if (hooks.on_round) hooks.on_round(stats);
    if (stats.batch_size == 0) break;
  }

  for (const auto& r : result.records) {
    if (!r.failed && r.runtime_s < result.best_runtime_s) {
      result.best_runtime_s = r.runtime_s;
      result.best_config = r.config;
    }
  }
  if (!(result.best_runtime_s < kFailedRuntime)) throw NoValidResult("no measurement succeeded");
  return result;
}

}  // namespace knobtuner
