#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "knobtuner/design_space.hpp"
#include "knobtuner/errors.hpp"
#include "knobtuner/network.hpp"
#include "knobtuner/random.hpp"

namespace knobtuner {

/// Anything that scores configurations in fitness units, e.g. CostModel.
template <class M>
concept Surrogate = requires(const M& m, const DesignSpace& s, std::span<const Configuration> c) {
  { m.predict(s, c) } -> std::convertible_to<std::vector<double>>;
};

struct AgentHyperparams {
  double adam_step_size = 1e-3;
  double discount = 0.9;
  double gae_parameter = 0.99;
  int epochs = 3;
  double clip = 0.3;
  double value_coef = 1.0;
  double entropy_coef = 0.1;
  int episodes_per_round = 64;
  int max_steps_per_episode = 32;
  // Architecture and optimizer details.
  int shared_width = 128;
  int head_width = 64;
  int minibatches = 8;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;

  void validate() const {
    auto fail = [](const char* field, const char* why) {
      throw InvalidArgument(std::string("agent hyperparameter '") + field + "' " + why);
    };
    if (!std::isfinite(adam_step_size) || adam_step_size <= 0) fail("adam_step_size", "must be finite and > 0");
    if (!std::isfinite(discount) || discount <= 0 || discount > 1) fail("discount", "must lie in (0, 1]");
    if (!std::isfinite(gae_parameter) || gae_parameter <= 0 || gae_parameter > 1)
      fail("gae_parameter", "must lie in (0, 1]");
    if (epochs < 1) fail("epochs", "must be >= 1");
    if (!std::isfinite(clip) || clip <= 0) fail("clip", "must be finite and > 0");
    if (!std::isfinite(value_coef)) fail("value_coef", "must be finite");
    if (!std::isfinite(entropy_coef)) fail("entropy_coef", "must be finite");
    if (episodes_per_round < 1) fail("episodes_per_round", "must be >= 1");
    if (max_steps_per_episode < 0) fail("max_steps_per_episode", "must be >= 0");
    if (shared_width < 1) fail("shared_width", "must be >= 1");
    if (head_width < 1) fail("head_width", "must be >= 1");
    if (minibatches < 1) fail("minibatches", "must be >= 1");
    if (!(adam_beta1 >= 0 && adam_beta1 < 1)) fail("adam_beta1", "must lie in [0, 1)");
    if (!(adam_beta2 >= 0 && adam_beta2 < 1)) fail("adam_beta2", "must lie in [0, 1)");
    if (!(adam_epsilon > 0)) fail("adam_epsilon", "must be > 0");
  }

  bool operator==(const AgentHyperparams&) const = default;
};

struct Agent {
  ActorCriticShape shape;
  AgentHyperparams hyper;
  std::vector<double> params;
  std::vector<double> adam_m;
  std::vector<double> adam_v;
  std::int64_t adam_t = 0;
  Rng rng;

  bool operator==(const Agent&) const = default;
};

/// Glorot-uniform weights, zero biases, all drawn from `seed`.
inline Agent init_agent(const DesignSpace& space, const AgentHyperparams& hyper, std::uint64_t seed) {
  hyper.validate();
  Agent agent;
  agent.hyper = hyper;
  agent.shape = {space.num_knobs(), static_cast<std::size_t>(hyper.shared_width),
                 static_cast<std::size_t>(hyper.head_width)};
  const auto& s = agent.shape;
  agent.params.assign(s.parameter_count(), 0.0);
  agent.adam_m.assign(s.parameter_count(), 0.0);
  agent.adam_v.assign(s.parameter_count(), 0.0);

  Rng init_rng(derive_seed(seed, 0));
  auto glorot = [&](std::size_t offset, std::size_t fan_out, std::size_t fan_in) {
    const double a = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    for (std::size_t i = 0; i < fan_out * fan_in; ++i) agent.params[offset + i] = init_rng.uniform(-a, a);
  };
  glorot(s.w_shared(), s.shared, s.inputs);
  glorot(s.w_policy(), s.head, s.shared);
  glorot(s.w_logits(), s.logits(), s.head);
  glorot(s.w_value(), s.head, s.shared);
  glorot(s.w_out(), 1, s.head);
  agent.rng = Rng(derive_seed(seed, 1));
  return agent;
}

struct PolicyOutput {
  std::vector<double> probs;  // 3 per knob: decrement, stay, increment
  double value = 0.0;
};

inline PolicyOutput evaluate(const Agent& agent, std::span<const double> state) {
  ForwardCache cache;
  forward(agent.shape, agent.params, state, cache);
  return {triple_softmax(cache.logits), cache.value};
}

/// Sum over knobs of log p(direction).
inline double action_log_prob(std::span<const double> probs, const Action& action) {
  double lp = 0.0;
  for (std::size_t d = 0; d < action.directions.size(); ++d)
    lp += std::log(probs[3 * d + static_cast<std::size_t>(action.directions[d] + 1)]);
  return lp;
}

inline Action sample_action(std::span<const double> probs, Rng& rng) {
  Action a;
  a.directions.resize(probs.size() / 3);
  for (std::size_t d = 0; d < a.directions.size(); ++d)
    a.directions[d] = static_cast<int>(rng.categorical(probs.subspan(3 * d, 3))) - 1;
  return a;
}

/// Mean per-knob entropy of a factored policy output.
inline double mean_entropy(std::span<const double> probs) {
  double h = 0.0;
  for (double p : probs)
    if (p > 0.0) h -= p * std::log(p);
  return probs.empty() ? 0.0 : h / static_cast<double>(probs.size() / 3);
}

/// delta_t = r_t + gamma V_{t+1} - V_t with V_L = terminal_value;
/// A_t = delta_t + gamma lambda A_{t+1}, A_L = 0.
inline std::vector<double> compute_gae(std::span<const double> rewards, std::span<const double> values,
                                       double terminal_value, double gamma, double lambda) {
  if (rewards.size() != values.size())
    throw InvalidArgument("compute_gae: rewards and values differ in length");
  if (rewards.empty()) throw InvalidArgument("compute_gae: empty input");
  const std::size_t n = rewards.size();
  std::vector<double> adv(n);
  double next_adv = 0.0;
  double next_value = terminal_value;
  for (std::size_t i = n; i-- > 0;) {
    const double delta = rewards[i] + gamma * next_value - values[i];
    next_adv = delta + gamma * lambda * next_adv;
    adv[i] = next_adv;
    next_value = values[i];
  }
  return adv;
}

/// Transitions of one search round. episode_boundaries holds the exclusive end
/// index of each episode; bootstrap_values the value estimate after the last
/// step of each episode (0 when it ended on its own all-stay action).
struct Rollout {
  std::vector<std::vector<double>> states;
  std::vector<Action> actions;
  std::vector<double> log_probs;
  std::vector<double> rewards;
  std::vector<double> values;
  std::vector<std::size_t> episode_boundaries;
  std::vector<double> bootstrap_values;

  std::size_t size() const noexcept { return states.size(); }
  bool empty() const noexcept { return states.empty(); }

  void validate(std::size_t knobs) const {
    const std::size_t n = states.size();
    if (actions.size() != n || log_probs.size() != n || rewards.size() != n || values.size() != n)
      throw InvalidArgument("rollout: parallel lists differ in length");
    if (episode_boundaries.empty() || episode_boundaries.back() != n)
      throw InvalidArgument("rollout: episode boundaries must end at rollout length");
    if (bootstrap_values.size() != episode_boundaries.size())
      throw InvalidArgument("rollout: one bootstrap value per episode required");
    std::size_t previous = 0;
    for (std::size_t b : episode_boundaries) {
      if (b <= previous) throw InvalidArgument("rollout: boundaries must be strictly increasing");
      previous = b;
    }
    for (std::size_t i = 0; i < n; ++i) {
      if (states[i].size() != knobs || actions[i].directions.size() != knobs)
        throw DimensionMismatch("rollout: step " + std::to_string(i) + " has wrong width");
    }
  }
};

/// Inputs of the clipped objective, after reward and advantage processing.
struct PpoBatch {
  std::vector<std::vector<double>> states;
  std::vector<Action> actions;
  std::vector<double> old_log_probs;
  std::vector<double> advantages;
  std::vector<double> returns;

  std::size_t size() const noexcept { return states.size(); }
};

namespace detail {

inline void standardize_or_zero(std::vector<double>& xs) {
  const double n = static_cast<double>(xs.size());
  const double mean = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
  double var = 0.0;
  for (double x : xs) var += (x - mean) * (x - mean);
  const double sd = std::sqrt(var / n);
  for (double& x : xs) x = sd < 1e-8 ? 0.0 : (x - mean) / sd;
}

}  // namespace detail

/// Rewards standardized over the round, GAE per episode, advantages
/// standardized over the update. A degenerate spread yields zeros.
inline PpoBatch prepare_batch(const Rollout& rollout, const AgentHyperparams& hyper) {
  PpoBatch batch;
  batch.states = rollout.states;
  batch.actions = rollout.actions;
  batch.old_log_probs = rollout.log_probs;

  std::vector<double> rewards = rollout.rewards;
  detail::standardize_or_zero(rewards);

  batch.advantages.reserve(rollout.size());
  std::size_t begin = 0;
  for (std::size_t e = 0; e < rollout.episode_boundaries.size(); ++e) {
    const std::size_t end = rollout.episode_boundaries[e];
    const auto adv = compute_gae(std::span(rewards).subspan(begin, end - begin),
                                 std::span(rollout.values).subspan(begin, end - begin),
                                 rollout.bootstrap_values[e], hyper.discount, hyper.gae_parameter);
    batch.advantages.insert(batch.advantages.end(), adv.begin(), adv.end());
    begin = end;
  }
  batch.returns.resize(rollout.size());
  for (std::size_t i = 0; i < rollout.size(); ++i) batch.returns[i] = batch.advantages[i] + rollout.values[i];
  detail::standardize_or_zero(batch.advantages);
  return batch;
}

struct ObjectiveBreakdown {
  double total = 0.0;        // loss minimized: policy_loss + c_v value_loss - c_e entropy
  double policy_loss = 0.0;  // -mean(min(ratio A, clip(ratio) A))
  double value_loss = 0.0;   // mean (V - return)^2
  double entropy = 0.0;      // mean per-knob entropy
  std::vector<double> ratios;
  std::vector<double> clipped_ratios;
};

/// Evaluates the PPO loss at `params` over `rows` of the batch and, when
/// `grad` is non-empty, accumulates its exact gradient.
inline ObjectiveBreakdown ppo_objective(const ActorCriticShape& shape, std::span<const double> params,
                                        const PpoBatch& batch, std::span<const std::size_t> rows,
                                        const AgentHyperparams& hyper, std::span<double> grad = {}) {
  ObjectiveBreakdown out;
  const double n = static_cast<double>(rows.size());
  const std::size_t knobs = shape.inputs;
  ForwardCache cache;
  std::vector<double> dlogits(shape.logits());
  for (std::size_t row : rows) {
    forward(shape, params, batch.states[row], cache);
    const auto probs = triple_softmax(cache.logits);
    const Action& action = batch.actions[row];
    const double log_prob = action_log_prob(probs, action);
    const double ratio = std::exp(log_prob - batch.old_log_probs[row]);
    const double clipped = std::clamp(ratio, 1.0 - hyper.clip, 1.0 + hyper.clip);
    const double adv = batch.advantages[row];
    const bool unclipped_active = ratio * adv <= clipped * adv;
    const double surrogate = unclipped_active ? ratio * adv : clipped * adv;
    const double value_err = cache.value - batch.returns[row];

    std::vector<double> entropies(knobs, 0.0);
    for (std::size_t d = 0; d < knobs; ++d)
      for (std::size_t j = 0; j < 3; ++j) {
        const double p = probs[3 * d + j];
        entropies[d] -= p * std::log(p);
      }
    const double entropy = std::accumulate(entropies.begin(), entropies.end(), 0.0) /
                           static_cast<double>(std::max<std::size_t>(1, knobs));

    out.policy_loss -= surrogate / n;
    out.value_loss += value_err * value_err / n;
    out.entropy += entropy / n;
    out.ratios.push_back(ratio);
    out.clipped_ratios.push_back(clipped);

    if (grad.empty()) continue;
    // d(-min(rA, clip(r)A))/dz = -A r (onehot - p) on the unclipped branch.
    const double dsurr = unclipped_active ? -adv * ratio / n : 0.0;
    const double ent_scale = hyper.entropy_coef / (n * static_cast<double>(std::max<std::size_t>(1, knobs)));
    for (std::size_t d = 0; d < knobs; ++d) {
      const auto chosen = static_cast<std::size_t>(action.directions[d] + 1);
      for (std::size_t j = 0; j < 3; ++j) {
        const double p = probs[3 * d + j];
        const double onehot = j == chosen ? 1.0 : 0.0;
        // dH/dz_j = -p_j (log p_j + H); the loss carries -c_e H.
        dlogits[3 * d + j] = dsurr * (onehot - p) + ent_scale * p * (std::log(p) + entropies[d]);
      }
    }
    const double dvalue = hyper.value_coef * 2.0 * value_err / n;
    backward(shape, params, cache, dlogits, dvalue, grad);
  }
  out.total = out.policy_loss + hyper.value_coef * out.value_loss - hyper.entropy_coef * out.entropy;
  return out;
}

inline void adam_step(Agent& agent, std::span<const double> grad, const AgentHyperparams& h) {
  ++agent.adam_t;
  const double t = static_cast<double>(agent.adam_t);
  const double c1 = 1.0 - std::pow(h.adam_beta1, t);
  const double c2 = 1.0 - std::pow(h.adam_beta2, t);
  for (std::size_t i = 0; i < agent.params.size(); ++i) {
    agent.adam_m[i] = h.adam_beta1 * agent.adam_m[i] + (1.0 - h.adam_beta1) * grad[i];
    agent.adam_v[i] = h.adam_beta2 * agent.adam_v[i] + (1.0 - h.adam_beta2) * grad[i] * grad[i];
    agent.params[i] -= h.adam_step_size * (agent.adam_m[i] / c1) / (std::sqrt(agent.adam_v[i] / c2) + h.adam_epsilon);
  }
}

struct LossReport {
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
};

/// `epochs` passes of clipped-surrogate PPO with Adam over `minibatches`
/// shuffled slices; reports the final epoch's losses, each slice evaluated
/// just before its own step.
inline LossReport ppo_update(Agent& agent, const Rollout& rollout, const AgentHyperparams& hyper) {
  hyper.validate();
  if (rollout.empty()) throw InvalidArgument("ppo_update: empty rollout");
  rollout.validate(agent.shape.inputs);
  const PpoBatch batch = prepare_batch(rollout, hyper);

  std::vector<std::size_t> order(batch.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const std::size_t parts = std::min<std::size_t>(static_cast<std::size_t>(hyper.minibatches), batch.size());

  LossReport report;
  std::vector<double> grad(agent.params.size());
  for (int epoch = 0; epoch < hyper.epochs; ++epoch) {
    if (parts > 1) {
      for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[agent.rng.below(i)]);
    }
    for (std::size_t p = 0; p < parts; ++p) {
      const std::size_t lo = p * order.size() / parts;
      const std::size_t hi = (p + 1) * order.size() / parts;
      std::fill(grad.begin(), grad.end(), 0.0);
      const auto obj = ppo_objective(agent.shape, agent.params, batch,
                                     std::span(order).subspan(lo, hi - lo), hyper, grad);
      if (epoch + 1 == hyper.epochs) {
        const double w = static_cast<double>(hi - lo) / static_cast<double>(order.size());
        report.policy_loss += w * obj.policy_loss;
        report.value_loss += w * obj.value_loss;
        report.entropy += w * obj.entropy;
      }
      adam_step(agent, grad, hyper);
    }
  }
  return report;
}

/// Visited configurations of one round with their surrogate scores.
struct Trajectory {
  std::vector<Configuration> configs;
  std::vector<double> scores;

  std::size_t size() const noexcept { return configs.size(); }
  bool empty() const noexcept { return configs.empty(); }
  void add(Configuration c, double score) {
    configs.push_back(std::move(c));
    scores.push_back(score);
  }
};

struct SearchOutcome {
  Trajectory trajectory;
  /// Round-best surrogate score after each lockstep step (index 0: starts).
  std::vector<double> best_by_step;
  std::size_t steps = 0;
  std::optional<LossReport> update;
};

namespace detail {

inline std::vector<double> best_by_step(const std::vector<std::vector<double>>& per_episode_scores) {
  std::size_t longest = 0;
  for (const auto& s : per_episode_scores) longest = std::max(longest, s.size());
  std::vector<double> out(longest, -std::numeric_limits<double>::infinity());
  for (const auto& s : per_episode_scores) {
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t t = 0; t < longest; ++t) {
      if (t < s.size()) best = std::max(best, s[t]);
      out[t] = std::max(out[t], best);
    }
  }
  return out;
}

}  // namespace detail

/// One search round: an episode per start, sampled until the agent chooses
/// all-stay or the step budget runs out; every visited configuration is then
/// scored in one surrogate batch and the agent gets one PPO update.
template <Surrogate Model>
SearchOutcome run_search_round(Agent& agent, const Model& model, const DesignSpace& space,
                               std::span<const Configuration> starts) {
  if (starts.empty()) throw InvalidArgument("run_search_round: no start configurations");
  if (agent.shape.inputs != space.num_knobs())
    throw DimensionMismatch("agent input width does not match space knob count");
  for (const auto& s : starts) space.check(s);

  const auto& hyper = agent.hyper;
  const std::uint64_t round_seed = agent.rng.next_u64();

  struct Episode {
    std::vector<Configuration> path;  // start followed by the result of each step
    std::vector<std::vector<double>> states;
    std::vector<Action> actions;
    std::vector<double> log_probs;
    std::vector<double> values;
    double bootstrap = 0.0;
  };
  std::vector<Episode> episodes(starts.size());
  for (std::size_t e = 0; e < starts.size(); ++e) {
    Rng rng(derive_seed(round_seed, e));
    Episode& ep = episodes[e];
    ep.path.push_back(starts[e]);
    bool converged = false;
    for (int step = 0; step < hyper.max_steps_per_episode; ++step) {
      auto state = encode_state(space, ep.path.back());
      const PolicyOutput out = evaluate(agent, state);
      Action action = sample_action(out.probs, rng);
      ep.log_probs.push_back(action_log_prob(out.probs, action));
      ep.values.push_back(out.value);
      ep.path.push_back(apply_action(space, ep.path.back(), action));
      ep.states.push_back(std::move(state));
      converged = action.is_stay();
      ep.actions.push_back(std::move(action));
      if (converged) break;
    }
    if (!ep.actions.empty() && !converged)
      ep.bootstrap = evaluate(agent, encode_state(space, ep.path.back())).value;
  }

  std::vector<Configuration> all;
  for (const auto& ep : episodes) all.insert(all.end(), ep.path.begin(), ep.path.end());
  const std::vector<double> scores = model.predict(space, all);

  SearchOutcome outcome;
  Rollout rollout;
  std::vector<std::vector<double>> per_episode_scores;
  std::size_t cursor = 0;
  for (auto& ep : episodes) {
    std::vector<double> ep_scores(scores.begin() + static_cast<std::ptrdiff_t>(cursor),
                                  scores.begin() + static_cast<std::ptrdiff_t>(cursor + ep.path.size()));
    for (std::size_t i = 0; i < ep.path.size(); ++i) outcome.trajectory.add(ep.path[i], ep_scores[i]);
    cursor += ep.path.size();
    if (!ep.actions.empty()) {
      for (std::size_t i = 0; i < ep.actions.size(); ++i) {
        rollout.states.push_back(std::move(ep.states[i]));
        rollout.actions.push_back(std::move(ep.actions[i]));
        rollout.log_probs.push_back(ep.log_probs[i]);
        rollout.values.push_back(ep.values[i]);
        rollout.rewards.push_back(ep_scores[i + 1]);
      }
      rollout.episode_boundaries.push_back(rollout.size());
      rollout.bootstrap_values.push_back(ep.bootstrap);
    }
    per_episode_scores.push_back(std::move(ep_scores));
  }
  outcome.best_by_step = detail::best_by_step(per_episode_scores);
  outcome.steps = rollout.size();
  if (!rollout.empty()) outcome.update = ppo_update(agent, rollout, hyper);
  return outcome;
}

inline nlohmann::ordered_json to_json(const AgentHyperparams& h) {
  return {{"adam_step_size", h.adam_step_size},
          {"discount", h.discount},
          {"gae_parameter", h.gae_parameter},
          {"epochs", h.epochs},
          {"clip", h.clip},
          {"value_coef", h.value_coef},
          {"entropy_coef", h.entropy_coef},
          {"episodes_per_round", h.episodes_per_round},
          {"max_steps_per_episode", h.max_steps_per_episode},
          {"shared_width", h.shared_width},
          {"head_width", h.head_width},
          {"minibatches", h.minibatches},
          {"adam_beta1", h.adam_beta1},
          {"adam_beta2", h.adam_beta2},
          {"adam_epsilon", h.adam_epsilon}};
}

/// Overlays any fields present in `doc` onto `base`; unknown keys are errors.
inline AgentHyperparams agent_hyperparams_from_json(const nlohmann::json& doc, AgentHyperparams base = {}) {
  if (!doc.is_object()) throw ParseError("agent hyperparameters must be a JSON object");
  for (const auto& [key, value] : doc.items()) {
    try {
      if (key == "adam_step_size") base.adam_step_size = value.get<double>();
      else if (key == "discount") base.discount = value.get<double>();
      else if (key == "gae_parameter") base.gae_parameter = value.get<double>();
      else if (key == "epochs") base.epochs = value.get<int>();
      else if (key == "clip") base.clip = value.get<double>();
      else if (key == "value_coef") base.value_coef = value.get<double>();
      else if (key == "entropy_coef") base.entropy_coef = value.get<double>();
      else if (key == "episodes_per_round") base.episodes_per_round = value.get<int>();
      else if (key == "max_steps_per_episode") base.max_steps_per_episode = value.get<int>();
      else if (key == "shared_width") base.shared_width = value.get<int>();
      else if (key == "head_width") base.head_width = value.get<int>();
      else if (key == "minibatches") base.minibatches = value.get<int>();
      else if (key == "adam_beta1") base.adam_beta1 = value.get<double>();
      else if (key == "adam_beta2") base.adam_beta2 = value.get<double>();
      else if (key == "adam_epsilon") base.adam_epsilon = value.get<double>();
      else throw ParseError("unknown agent hyperparameter '" + key + "'");
    } catch (const nlohmann::json::exception& e) {
      throw ParseError("agent hyperparameter '" + key + "': " + e.what());
    }
  }
  return base;
}

inline nlohmann::ordered_json to_json(const Agent& agent) {
  return {{"inputs", agent.shape.inputs},
          {"hyper", to_json(agent.hyper)},
          {"params", agent.params},
          {"adam_m", agent.adam_m},
          {"adam_v", agent.adam_v},
          {"adam_t", agent.adam_t},
          {"rng", agent.rng.state()}};
}

inline Agent agent_from_json(const nlohmann::json& doc) {
  try {
    Agent agent;
    agent.hyper = agent_hyperparams_from_json(doc.at("hyper"));
    agent.hyper.validate();
    agent.shape = {doc.at("inputs").get<std::size_t>(), static_cast<std::size_t>(agent.hyper.shared_width),
                   static_cast<std::size_t>(agent.hyper.head_width)};
    agent.params = doc.at("params").get<std::vector<double>>();
    agent.adam_m = doc.at("adam_m").get<std::vector<double>>();
    agent.adam_v = doc.at("adam_v").get<std::vector<double>>();
    agent.adam_t = doc.at("adam_t").get<std::int64_t>();
    agent.rng.set_state(doc.at("rng").get<std::string>());
    const std::size_t count = agent.shape.parameter_count();
    if (agent.params.size() != count || agent.adam_m.size() != count || agent.adam_v.size() != count)
      throw ParseError("agent checkpoint: parameter count does not match architecture");
    return agent;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("agent checkpoint: ") + e.what());
  }
}

}  // namespace knobtuner
