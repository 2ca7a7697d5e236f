#pragma once

#include <memory>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "knobtuner/adaptive_sampler.hpp"
#include "knobtuner/cost_model.hpp"
#include "knobtuner/design_space.hpp"
#include "knobtuner/driver.hpp"
#include "knobtuner/errors.hpp"
#include "knobtuner/measurement.hpp"

namespace knobtuner {

inline nlohmann::ordered_json to_json(const BoostParams& p) {
  return {{"rounds", p.rounds}, {"max_depth", p.max_depth}, {"learning_rate", p.learning_rate}};
}

inline BoostParams boost_params_from_json(const nlohmann::json& doc, BoostParams base = {}) {
  if (!doc.is_object()) throw ParseError("cost model parameters must be a JSON object");
  for (const auto& [key, value] : doc.items()) {
    try {
      if (key == "rounds") base.rounds = value.get<int>();
      else if (key == "max_depth") base.max_depth = value.get<int>();
      else if (key == "learning_rate") base.learning_rate = value.get<double>();
      else throw ParseError("unknown cost model parameter '" + key + "'");
    } catch (const nlohmann::json::exception& e) {
      throw ParseError("cost model parameter '" + key + "': " + e.what());
    }
  }
  return base;
}

inline nlohmann::ordered_json to_json(const AdaptiveSamplerOptions& o) {
  return {{"knee_constant", o.knee_constant}, {"min_k", o.min_k}, {"max_k", o.max_k}};
}

inline AdaptiveSamplerOptions sampler_options_from_json(const nlohmann::json& doc, AdaptiveSamplerOptions base = {}) {
  if (!doc.is_object()) throw ParseError("sampler parameters must be a JSON object");
  for (const auto& [key, value] : doc.items()) {
    try {
      if (key == "knee_constant") base.knee_constant = value.get<double>();
      else if (key == "min_k") base.min_k = value.get<std::size_t>();
      else if (key == "max_k") base.max_k = value.get<std::size_t>();
      else throw ParseError("unknown sampler parameter '" + key + "'");
    } catch (const nlohmann::json::exception& e) {
      throw ParseError("sampler parameter '" + key + "': " + e.what());
    }
  }
  return base;
}

// ---------------------------------------------------------------------------
// Backend specs: "synthetic:LANDSCAPE.json", "external:COMMAND", "replay:LOG.jsonl"

struct BackendSpec {
  enum class Kind { Synthetic, External, Replay } kind = Kind::Synthetic;
  std::string argument;

  std::string to_string() const {
    switch (kind) {
      case Kind::Synthetic: return "synthetic:" + argument;
      case Kind::External: return "external:" + argument;
      case Kind::Replay: return "replay:" + argument;
    }
    return argument;
  }
};

inline BackendSpec parse_backend_spec(std::string_view text) {
  const auto colon = text.find(':');
  if (colon == std::string_view::npos || colon + 1 == text.size())
    throw InvalidArgument("backend '" + std::string(text) +
                          "' must look like synthetic:FILE, external:COMMAND or replay:LOG");
  const std::string_view kind = text.substr(0, colon);
  BackendSpec spec;
  spec.argument = std::string(text.substr(colon + 1));
  if (kind == "synthetic") spec.kind = BackendSpec::Kind::Synthetic;
  else if (kind == "external") spec.kind = BackendSpec::Kind::External;
  else if (kind == "replay") spec.kind = BackendSpec::Kind::Replay;
  else throw InvalidArgument("unknown backend kind '" + std::string(kind) + "' (expected synthetic, external or replay)");
  return spec;
}

inline std::unique_ptr<MeasurementBackend> make_backend(const BackendSpec& spec, const DesignSpace& space) {
  switch (spec.kind) {
    case BackendSpec::Kind::Synthetic:
      return std::make_unique<SyntheticBackend>(load_landscape_file(spec.argument, space));
    case BackendSpec::Kind::External:
      return std::make_unique<ExternalBackend>(spec.argument);
    case BackendSpec::Kind::Replay: {
      const auto records = load_log(spec.argument);
      return std::make_unique<ReplayBackend>(records);
    }
  }
  throw InvalidArgument("unhandled backend kind");
}

// ---------------------------------------------------------------------------
// Task files. A summary file embeds its task under "task", so either works.

struct TaskFile {
  TuningTask task;
  BackendSpec backend;
};

inline nlohmann::ordered_json to_json(const TuningTask& t, const BackendSpec& backend) {
  nlohmann::ordered_json doc;
  doc["space"] = to_json(t.space);
  doc["backend"] = backend.to_string();
  doc["strategy"] = to_string(t.strategy);
  doc["budget"] = t.budget;
  doc["seed"] = t.seed;
  doc["agent"] = to_json(t.agent);
  doc["sa"] = to_json(t.sa);
  doc["boost"] = to_json(t.boost);
  doc["sampler"] = to_json(t.sampler);
  doc["greedy_batch"] = t.greedy_batch;
  doc["convergence_window"] = t.convergence_window;
  return doc;
}

inline TaskFile task_from_json(const nlohmann::json& input) {
  const nlohmann::json& doc = input.contains("task") ? input.at("task") : input;
  if (!doc.is_object()) throw ParseError("task must be a JSON object");
  if (!doc.contains("space")) throw ParseError("task has no 'space'");
  TaskFile out{TuningTask(doc.at("space").is_string() ? load_space_file(doc.at("space").get<std::string>())
                                                      : space_from_json(doc.at("space"))),
               {}};
  TuningTask& t = out.task;
  for (const auto& [key, value] : doc.items()) {
    try {
      if (key == "space") continue;
      if (key == "backend") out.backend = parse_backend_spec(value.get<std::string>());
      else if (key == "strategy") t.strategy = parse_strategy(value.get<std::string>());
      else if (key == "budget") t.budget = value.get<std::int64_t>();
      else if (key == "seed") t.seed = value.get<std::uint64_t>();
      else if (key == "agent") t.agent = agent_hyperparams_from_json(value, t.agent);
      else if (key == "sa") t.sa = sa_params_from_json(value, t.sa);
      else if (key == "boost") t.boost = boost_params_from_json(value, t.boost);
      else if (key == "sampler") t.sampler = sampler_options_from_json(value, t.sampler);
      else if (key == "greedy_batch") t.greedy_batch = value.get<std::size_t>();
      else if (key == "convergence_window") t.convergence_window = value.get<std::size_t>();
      else throw ParseError("unknown task field '" + key + "'");
    } catch (const nlohmann::json::exception& e) {
      throw ParseError("task field '" + key + "': " + e.what());
    }
  }
  t.validate();
  return out;
}

inline TaskFile load_task_file(const std::string& path) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(read_text_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(path + ": " + e.what());
  }
  return task_from_json(doc);
}

inline nlohmann::ordered_json to_json(const RoundStats& s) {
  return {{"round", s.round},
          {"search_steps", s.search_steps},
          {"steps_to_convergence", s.steps_to_convergence},
          {"trajectory_size", s.trajectory_size},
          {"batch_size", s.batch_size},
          {"chosen_k", s.chosen_k},
          {"round_best_score", s.round_best_score}};
}

inline RoundStats round_stats_from_json(const nlohmann::json& doc) {
  RoundStats s;
  s.round = doc.at("round").get<std::int64_t>();
  s.search_steps = doc.at("search_steps").get<std::size_t>();
  s.steps_to_convergence = doc.at("steps_to_convergence").get<std::size_t>();
  s.trajectory_size = doc.at("trajectory_size").get<std::size_t>();
  s.batch_size = doc.at("batch_size").get<std::size_t>();
  s.chosen_k = doc.at("chosen_k").get<std::size_t>();
  s.round_best_score = doc.at("round_best_score").get<double>();
  return s;
}

/// Summary file: the result, the round statistics and the full effective task.
inline nlohmann::ordered_json summary_json(const TuningTask& task, const BackendSpec& backend,
                                           const TuningResult& result, double wall_time_s) {
  nlohmann::ordered_json doc;
  doc["schema"] = "knobtuner.summary.v1";
  doc["strategy"] = to_string(task.strategy);
  doc["best_config"] = result.best_config.indices;
  doc["best_values"] = task.space.values_of(result.best_config);
  doc["best_runtime_s"] = result.best_runtime_s;
  doc["best_fitness"] = 1.0 / result.best_runtime_s;
  doc["measurements_used"] = result.measurements_used;
  doc["rounds"] = result.rounds;
  doc["log_path"] = result.log_path;
  doc["wall_time_s"] = wall_time_s;
  doc["round_stats"] = nlohmann::ordered_json::array();
  for (const auto& s : result.round_stats) doc["round_stats"].push_back(to_json(s));
  doc["task"] = to_json(task, backend);
  return doc;
}

}  // namespace knobtuner
