// knobtuner command-line front end: tune, compare, report, enumerate, gen-landscape.

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "knobtuner/knobtuner.hpp"

namespace fs = std::filesystem;
using namespace knobtuner;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitRuntime = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void configure_logging() {
  auto logger = spdlog::stderr_color_mt("knobtuner");
  logger->set_pattern("[%l] %v");
  spdlog::set_default_logger(logger);
  spdlog::set_level(spdlog::level::info);
  if (const char* env = std::getenv("KNOBTUNER_LOG_LEVEL")) {
    const std::string level = env;
    if (level == "error") spdlog::set_level(spdlog::level::err);
    else if (level == "info") spdlog::set_level(spdlog::level::info);
    else if (level == "debug") spdlog::set_level(spdlog::level::debug);
    else spdlog::warn("KNOBTUNER_LOG_LEVEL='{}' not recognized, using info", level);
  }
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw Error("write to '" + path.string() + "' failed");
}

nlohmann::json read_json(const std::string& path) {
  try {
    return nlohmann::json::parse(read_text_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(path + ": " + e.what());
  }
}

/// Flags shared by tune and compare.
struct TaskFlags {
  std::string task_file;
  std::string space_file;
  std::string backend;
  std::string strategy;
  std::optional<std::int64_t> budget;
  std::optional<std::uint64_t> seed;
  std::string params_file;
  std::string clock = "fixed";
  std::string out;
  bool force = false;

  void attach(CLI::App& app) {
    app.add_option("--task", task_file, "task or summary JSON file; other flags override it");
    app.add_option("--space", space_file, "design space JSON file");
    app.add_option("--backend", backend, "synthetic:LANDSCAPE | external:COMMAND | replay:LOG");
    app.add_option("--budget", budget, "maximum number of hardware measurements");
    app.add_option("--seed", seed, "random seed (default 0)");
    app.add_option("--params", params_file, "JSON file with agent/sa/boost/sampler overrides");
    app.add_option("--clock", clock, "record timestamps: fixed (0, reproducible) or wall")
        ->check(CLI::IsMember({"fixed", "wall"}));
    app.add_option("--out", out, "output directory")->required();
    app.add_flag("--force", force, "overwrite existing logs in the output directory");
  }

  /// Task file, then explicit flags, then --params groups; parsed once at the end.
  TaskFile build() const {
    nlohmann::json doc = nlohmann::json::object();
    if (!task_file.empty()) {
      doc = read_json(task_file);
      if (doc.contains("task")) doc = nlohmann::json(doc.at("task"));
    }
    if (!space_file.empty()) doc["space"] = to_json(load_space_file(space_file));
    if (!doc.contains("space")) throw UsageError("one of --space or --task is required");
    if (!backend.empty()) doc["backend"] = backend;
    if (!doc.contains("backend")) throw UsageError("--backend is required (or a task file that names one)");
    if (!strategy.empty()) doc["strategy"] = strategy;
    if (budget) doc["budget"] = *budget;
    if (seed) doc["seed"] = *seed;
    if (!params_file.empty()) {
      const nlohmann::json params = read_json(params_file);
      if (!params.is_object()) throw UsageError(params_file + ": parameters must be a JSON object");
      for (const auto& [key, value] : params.items()) {
        if (key == "agent" || key == "sa" || key == "boost" || key == "sampler") {
          if (!doc.contains(key)) doc[key] = nlohmann::json::object();
          doc[key].update(value);
        } else if (key == "greedy_batch" || key == "convergence_window") {
          doc[key] = value;
        } else {
          throw UsageError("unknown parameter group '" + key + "' in " + params_file);
        }
      }
    }
    return task_from_json(doc);
  }
};

struct RunOutcome {
  TuningResult result;
  double wall_time_s = 0.0;
};

RunOutcome run_one(const TaskFile& tf, const fs::path& dir, bool force, const std::string& clock) {
  fs::create_directories(dir);
  const fs::path log_path = dir / "log.jsonl";
  if (fs::exists(log_path)) {
    if (!force) throw Error("'" + log_path.string() + "' already exists; pass --force to overwrite");
    fs::remove(log_path);
  }
  auto backend = make_backend(tf.backend, tf.task.space);
  MeasurementLog log(log_path.string());
  TuneHooks hooks;
  hooks.log = &log;
  hooks.clock = clock == "wall" ? wall_clock() : fixed_clock();
  hooks.on_round = [&](const RoundStats& s) {
    spdlog::debug("{} round {}: batch {} trajectory {} k {} steps-to-convergence {}", to_string(tf.task.strategy),
                  s.round, s.batch_size, s.trajectory_size, s.chosen_k, s.steps_to_convergence);
  };
  const auto start = std::chrono::steady_clock::now();
  RunOutcome out;
  out.result = tune(tf.task, *backend, hooks);
  out.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  write_file(dir / "summary.json", summary_json(tf.task, tf.backend, out.result, out.wall_time_s).dump(2) + "\n");
  spdlog::info("{}: best runtime {:.6g} s after {} measurements in {} rounds ({:.1f} s)", to_string(tf.task.strategy),
               out.result.best_runtime_s, out.result.measurements_used, out.result.rounds, out.wall_time_s);
  return out;
}

/// Key shared by runs of the same task: everything but the strategy and its parameters.
std::string task_key(const nlohmann::json& task) {
  nlohmann::json key;
  for (const char* field : {"space", "backend", "budget", "seed"})
    if (task.contains(field)) key[field] = task.at(field);
  return key.dump();
}

/// Enumerated optimum when the backend is synthetic and the space small enough.
std::optional<double> oracle_for(const DesignSpace& space, const BackendSpec& backend) {
  if (backend.kind != BackendSpec::Kind::Synthetic) return std::nullopt;
  if (space.total_cardinality() > kDefaultEnumerationCap) return std::nullopt;
  const SyntheticLandscape land = load_landscape_file(backend.argument, space);
  return enumerate_oracle(space, [&](const Configuration& c) { return synthetic_runtime(land, c); }).best_runtime;
}

void write_reports(const std::vector<RunData>& runs, const DesignSpace& space, std::optional<double> oracle,
                   const fs::path& out) {
  fs::create_directories(out);
  std::vector<ProjectionRow> projection;
  std::vector<Configuration> all;
  for (const auto& run : runs) {
    const Curve curve = best_so_far_curve(run.records);
    if (curve.all_failed) spdlog::warn("{}: every measurement failed, curve is empty", run.strategy);
    write_file(out / ("curve_" + run.strategy + ".csv"), curve_csv(curve));
    for (const auto& r : run.records) all.push_back(r.config);
  }
  if (all.size() >= 2 && space.num_knobs() >= 2) {
    try {
      const auto xy = pca_project(all);
      std::size_t i = 0;
      for (const auto& run : runs)
        for (std::size_t m = 0; m < run.records.size(); ++m, ++i)
          projection.push_back({run.strategy, m + 1, xy[i], run.records[m].fitness});
      write_file(out / "projection.csv", projection_csv(projection));
    } catch (const InvalidArgument& e) {
      spdlog::warn("projection skipped: {}", e.what());
    }
  }
  if (runs.size() >= 2) {
    const ComparisonTable table = compare_runs(runs, oracle);
    write_file(out / "comparison.csv", comparison_csv(table));
    write_file(out / "comparison.txt", comparison_text(table));
    std::cout << comparison_text(table);
  }
}

TaskFile build_or_usage(const TaskFlags& flags) {
  try {
    return flags.build();
  } catch (const InvalidArgument& e) {
    throw UsageError(e.what());
  } catch (const ParseError& e) {
    throw UsageError(e.what());
  }
}

int cmd_tune(const TaskFlags& flags) {
  const TaskFile tf = build_or_usage(flags);
  const RunOutcome run = run_one(tf, flags.out, flags.force, flags.clock);
  std::cout << "best_config " << nlohmann::json(tf.task.space.values_of(run.result.best_config)).dump()
            << " runtime_s " << run.result.best_runtime_s << " measurements " << run.result.measurements_used << "\n";
  return kExitOk;
}

int cmd_compare(const TaskFlags& flags, const std::string& strategies) {
  const TaskFile base = build_or_usage(flags);
  std::vector<Strategy> arms;
  try {
    std::stringstream list(strategies);
    for (std::string item; std::getline(list, item, ',');)
      if (!item.empty()) arms.push_back(parse_strategy(item));
  } catch (const InvalidArgument& e) {
    throw UsageError(e.what());
  }
  if (arms.size() < 2) throw UsageError("--strategies needs at least two arms");
  const std::string key = task_key(to_json(base.task, base.backend));
  std::vector<RunData> runs;
  for (Strategy s : arms) {
    TaskFile tf = base;
    tf.task.strategy = s;
    const RunOutcome out = run_one(tf, fs::path(flags.out) / std::string(to_string(s)), flags.force, flags.clock);
    runs.push_back({std::string(to_string(s)), key, out.result.records, out.result.round_stats, out.wall_time_s});
  }
  write_reports(runs, base.task.space, oracle_for(base.task.space, base.backend), flags.out);
  return kExitOk;
}

int cmd_report(const std::vector<std::string>& dirs, const std::string& out, std::optional<double> oracle_flag) {
  std::vector<RunData> runs;
  std::optional<TaskFile> first;
  for (const auto& dir : dirs) {
    const nlohmann::json summary = read_json((fs::path(dir) / "summary.json").string());
    RunData run;
    run.strategy = summary.at("strategy").get<std::string>();
    run.task_key = task_key(summary.at("task"));
    run.wall_time_s = summary.value("wall_time_s", 0.0);
    for (const auto& s : summary.at("round_stats")) run.round_stats.push_back(round_stats_from_json(s));
    run.records = load_log((fs::path(dir) / "log.jsonl").string());
    if (!first) first = task_from_json(summary);
    runs.push_back(std::move(run));
  }
  std::optional<double> oracle = oracle_flag;
  if (!oracle) oracle = oracle_for(first->task.space, first->backend);
  write_reports(runs, first->task.space, oracle, out);
  return kExitOk;
}

int cmd_enumerate(const std::string& space_file, const std::string& backend_text, const std::string& out) {
  const DesignSpace space = load_space_file(space_file);
  nlohmann::ordered_json doc;
  doc["space"] = space.name();
  doc["configurations"] = space.total_cardinality();
  if (!backend_text.empty()) {
    const BackendSpec spec = parse_backend_spec(backend_text);
    if (spec.kind != BackendSpec::Kind::Synthetic) throw UsageError("enumerate needs a synthetic backend");
    const SyntheticLandscape land = load_landscape_file(spec.argument, space);
    const OracleResult oracle =
        enumerate_oracle(space, [&](const Configuration& c) { return synthetic_runtime(land, c); });
    doc["best_config"] = oracle.best.indices;
    doc["best_values"] = space.values_of(oracle.best);
    doc["best_runtime_s"] = oracle.best_runtime;
    doc["best_fitness"] = 1.0 / oracle.best_runtime;
  } else {
    std::uint64_t n = 0;
    for (const auto& c : enumerate_space(space)) {
      (void)c;
      ++n;
    }
    doc["enumerated"] = n;
  }
  const std::string text = doc.dump(2) + "\n";
  if (out.empty()) std::cout << text;
  else write_file(out, text);
  return kExitOk;
}

int cmd_gen_landscape(const std::string& space_file, std::uint64_t seed, const LandscapeOptions& options,
                      const std::string& out) {
  const DesignSpace space = load_space_file(space_file);
  const SyntheticLandscape land = generate_landscape(space, seed, options);
  const std::string text = to_json(land, space).dump(2) + "\n";
  if (out.empty()) std::cout << text;
  else write_file(out, text);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  configure_logging();
  CLI::App app{"knobtuner: surrogate-guided search over code-generation knobs"};
  app.require_subcommand(1);

  TaskFlags tune_flags;
  CLI::App* tune = app.add_subcommand("tune", "run one tuning task");
  tune_flags.attach(*tune);
  tune->add_option("--strategy", tune_flags.strategy, "rl+as, rl, sa+as, sa or random (default rl+as)");

  TaskFlags compare_flags;
  std::string strategies = "sa,sa+as,rl,rl+as";
  CLI::App* compare = app.add_subcommand("compare", "run several strategies on one task and compare them");
  compare_flags.attach(*compare);
  compare->add_option("--strategies", strategies, "comma-separated strategy list");

  std::vector<std::string> report_runs;
  std::string report_out;
  std::optional<double> report_oracle;
  CLI::App* report = app.add_subcommand("report", "summarize existing run directories");
  report->add_option("--runs", report_runs, "run directories holding summary.json and log.jsonl")->required();
  report->add_option("--out", report_out, "output directory")->required();
  report->add_option("--oracle-runtime", report_oracle, "known optimum runtime in seconds");

  std::string enum_space, enum_backend, enum_out;
  CLI::App* enumerate = app.add_subcommand("enumerate", "brute-force an enumerable space");
  enumerate->add_option("--space", enum_space, "design space JSON file")->required();
  enumerate->add_option("--backend", enum_backend, "synthetic:LANDSCAPE to report the optimum");
  enumerate->add_option("--out", enum_out, "output file (default stdout)");

  std::string gen_space, gen_out;
  std::uint64_t gen_seed = 0;
  LandscapeOptions gen_options;
  CLI::App* gen = app.add_subcommand("gen-landscape", "write a seeded synthetic landscape");
  gen->add_option("--space", gen_space, "design space JSON file")->required();
  gen->add_option("--seed", gen_seed, "landscape seed (default 0)");
  gen->add_option("--decoys", gen_options.decoys, "number of decoy basins");
  gen->add_option("--optimum-depth", gen_options.optimum_depth, "relative depth of the optimum basin");
  gen->add_option("--optimum-radius", gen_options.optimum_radius, "optimum radius as a fraction of knob span");
  gen->add_option("--noise", gen_options.noise_rel, "relative measurement noise amplitude");
  gen->add_option("--out", gen_out, "output file (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*tune) return cmd_tune(tune_flags);
    if (*compare) return cmd_compare(compare_flags, strategies);
    if (*report) return cmd_report(report_runs, report_out, report_oracle);
    if (*enumerate) return cmd_enumerate(enum_space, enum_backend, enum_out);
    if (*gen) return cmd_gen_landscape(gen_space, gen_seed, gen_options, gen_out);
  } catch (const UsageError& e) {
    spdlog::error("{}", e.what());
    return kExitUsage;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return kExitRuntime;
  }
  return kExitUsage;
}
