#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "knobtuner/design_space.hpp"
#include "knobtuner/errors.hpp"
#include "knobtuner/random.hpp"
#include "knobtuner/rl_agent.hpp"

namespace knobtuner {

/// Simulated-annealing schedule. An unset initial temperature means "std of
/// the starting scores, or 1.0 when they do not spread".
struct SAParams {
  int chains = 64;
  int steps_per_round = 128;
  std::optional<double> initial_temperature;
  double cooling = 0.99;

  void validate() const {
    if (chains < 1) throw InvalidArgument("SA parameter 'chains' must be >= 1");
    if (steps_per_round < 1) throw InvalidArgument("SA parameter 'steps_per_round' must be >= 1");
    if (initial_temperature && !(*initial_temperature > 0.0 && std::isfinite(*initial_temperature)))
      throw InvalidArgument("SA parameter 'initial_temperature' must be finite and > 0");
    if (!(cooling > 0.0 && cooling <= 1.0)) throw InvalidArgument("SA parameter 'cooling' must lie in (0, 1]");
  }
};

struct SAOutcome {
  Trajectory trajectory;  // chain starts plus every accepted move
  std::vector<double> best_by_step;
  std::size_t proposals = 0;
  std::size_t accepted = 0;
  double initial_temperature = 0.0;
};

/// Metropolis chains over random single-knob +-1 moves (clamped), proposals
/// scored in one surrogate batch per lockstep step.
template <Surrogate Model>
SAOutcome run_sa_round(const SAParams& params, const Model& model, const DesignSpace& space,
                       std::span<const Configuration> starts, std::uint64_t seed) {
  params.validate();
  if (starts.empty()) throw InvalidArgument("run_sa_round: no start configurations");
  for (const auto& s : starts) space.check(s);

  const auto chains = static_cast<std::size_t>(params.chains);
  std::vector<Configuration> current(starts.begin(),
                                     starts.begin() + static_cast<std::ptrdiff_t>(std::min(chains, starts.size())));
  Rng pad_rng(derive_seed(seed, 0xfadeULL));
  while (current.size() < chains) current.push_back(space.random_config(pad_rng));

  std::vector<Rng> rngs;
  rngs.reserve(chains);
  for (std::size_t c = 0; c < chains; ++c) rngs.emplace_back(derive_seed(seed, c));

  SAOutcome out;
  std::vector<double> score = model.predict(space, current);
  for (std::size_t c = 0; c < chains; ++c) out.trajectory.add(current[c], score[c]);

  double temperature = 1.0;
  if (params.initial_temperature) {
    temperature = *params.initial_temperature;
  } else {
    const double mean = std::accumulate(score.begin(), score.end(), 0.0) / static_cast<double>(chains);
    double var = 0.0;
    for (double s : score) var += (s - mean) * (s - mean);
    const double sd = std::sqrt(var / static_cast<double>(chains));
    if (sd > 1e-12 && std::isfinite(sd)) temperature = sd;
  }
  out.initial_temperature = temperature;

  double best = -std::numeric_limits<double>::infinity();
  for (double s : score) best = std::max(best, s);
  out.best_by_step.push_back(best);

  std::vector<Configuration> proposal(chains);
  for (int step = 0; step < params.steps_per_round; ++step) {
    for (std::size_t c = 0; c < chains; ++c) {
      Action move;
      move.directions.assign(space.num_knobs(), 0);
      const std::size_t knob = rngs[c].below(space.num_knobs());
      move.directions[knob] = rngs[c].below(2) == 0 ? -1 : 1;
      proposal[c] = apply_action(space, current[c], move);
    }
    const std::vector<double> proposed = model.predict(space, proposal);
    for (std::size_t c = 0; c < chains; ++c) {
      const double delta = proposed[c] - score[c];
      const double u = rngs[c].uniform01();
      ++out.proposals;
      if (delta >= 0.0 || u < std::exp(delta / temperature)) {
        ++out.accepted;
        current[c] = proposal[c];
        score[c] = proposed[c];
        out.trajectory.add(current[c], score[c]);
        best = std::max(best, score[c]);
      }
    }
    out.best_by_step.push_back(best);
    temperature *= params.cooling;
  }
  return out;
}

inline nlohmann::ordered_json to_json(const SAParams& p) {
  nlohmann::ordered_json doc{{"chains", p.chains}, {"steps_per_round", p.steps_per_round}};
  doc["initial_temperature"] = p.initial_temperature ? nlohmann::ordered_json(*p.initial_temperature) : nlohmann::ordered_json(nullptr);
  doc["cooling"] = p.cooling;
  return doc;
}

inline SAParams sa_params_from_json(const nlohmann::json& doc, SAParams base = {}) {
  if (!doc.is_object()) throw ParseError("SA parameters must be a JSON object");
  for (const auto& [key, value] : doc.items()) {
    try {
      if (key == "chains") base.chains = value.get<int>();
      else if (key == "steps_per_round") base.steps_per_round = value.get<int>();
      else if (key == "initial_temperature")
        base.initial_temperature = value.is_null() ? std::nullopt : std::optional<double>(value.get<double>());
      else if (key == "cooling") base.cooling = value.get<double>();
      else throw ParseError("unknown SA parameter '" + key + "'");
    } catch (const nlohmann::json::exception& e) {
      throw ParseError("SA parameter '" + key + "': " + e.what());
    }
  }
  return base;
}

}  // namespace knobtuner
