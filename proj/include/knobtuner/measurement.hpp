#pragma once

#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <functional>
#include <limits>
#include <memory>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "knobtuner/design_space.hpp"
#include "knobtuner/errors.hpp"
#include "knobtuner/random.hpp"
#include "knobtuner/subprocess.hpp"

namespace knobtuner {

inline constexpr double kFailedRuntime = std::numeric_limits<double>::infinity();

struct MeasurementRecord {
  Configuration config;
  double runtime_s = kFailedRuntime;
  double fitness = 0.0;
  bool failed = true;
  std::int64_t iteration = 0;
  std::string backend;
  double timestamp = 0.0;

  /// Builds a record whose fitness/failed fields follow from the runtime.
  static MeasurementRecord from_runtime(Configuration config, double runtime_s, std::int64_t iteration,
                                        std::string backend, double timestamp) {
    MeasurementRecord r;
    r.config = std::move(config);
    r.failed = !(std::isfinite(runtime_s) && runtime_s > 0.0);
    r.runtime_s = r.failed ? kFailedRuntime : runtime_s;
    r.fitness = r.failed ? 0.0 : 1.0 / runtime_s;
    r.iteration = iteration;
    r.backend = std::move(backend);
    r.timestamp = timestamp;
    return r;
  }

  bool operator==(const MeasurementRecord&) const = default;
};

/// One JSON Lines record; keys in fixed order, a failed runtime is null.
inline std::string to_json_line(const MeasurementRecord& r) {
  nlohmann::ordered_json doc;
  doc["config"] = r.config.indices;
  doc["runtime_s"] = r.failed ? nlohmann::ordered_json(nullptr) : nlohmann::ordered_json(r.runtime_s);
  doc["fitness"] = r.fitness;
  doc["failed"] = r.failed;
  doc["iteration"] = r.iteration;
  doc["backend"] = r.backend;
  doc["timestamp"] = r.timestamp;
  return doc.dump();
}

inline MeasurementRecord record_from_json_line(const std::string& line) {
  const auto doc = nlohmann::json::parse(line);
  MeasurementRecord r;
  r.config.indices = doc.at("config").get<std::vector<std::size_t>>();
  const auto& runtime = doc.at("runtime_s");
  r.failed = doc.at("failed").get<bool>();
  r.runtime_s = runtime.is_null() ? kFailedRuntime : runtime.get<double>();
  r.fitness = doc.at("fitness").get<double>();
  r.iteration = doc.at("iteration").get<std::int64_t>();
  r.backend = doc.at("backend").get<std::string>();
  r.timestamp = doc.at("timestamp").get<double>();
  if (r.failed != (r.fitness == 0.0) || r.failed != runtime.is_null())
    throw ParseError("inconsistent failed/fitness/runtime fields");
  return r;
}

/// Parses a JSON Lines measurement log. Blank lines are skipped.
inline std::vector<MeasurementRecord> load_log(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open log '" + path + "'");
  std::vector<MeasurementRecord> records;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      records.push_back(record_from_json_line(line));
    } catch (const std::exception& e) {
      throw ParseError(path + ": line " + std::to_string(number) + ": " + e.what());
    }
  }
  return records;
}

/// Append-only JSON Lines writer; every append is flushed before returning.
class MeasurementLog {
 public:
  explicit MeasurementLog(std::string path) : path_(std::move(path)), out_(path_, std::ios::app) {
    if (!out_) throw Error("cannot open log '" + path_ + "' for appending");
  }

  void append(std::span<const MeasurementRecord> records) {
    for (const auto& r : records) out_ << to_json_line(r) << '\n';
    out_.flush();
    if (!out_) throw Error("write to log '" + path_ + "' failed");
  }

  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
  std::ofstream out_;
};

// ---------------------------------------------------------------------------
// Synthetic landscape

struct LandscapeCenter {
  std::vector<double> position;  // in index space
  double depth = 0.0;
  double radius = 1.0;

  bool operator==(const LandscapeCenter&) const = default;
};

/// runtime(x) = base * (1 - sum_j depth_j exp(-|x - c_j|^2 / r_j^2)) * (1 + noise_rel u(seed, x)),
/// clamped below at 1% of base; u is a hash of (seed, x) in [-1, 1].
struct SyntheticLandscape {
  std::uint64_t seed = 0;
  std::vector<LandscapeCenter> centers;
  double base_runtime = 1e-3;
  double noise_rel = 0.0;

  void validate(std::size_t knobs) const {
    double total_depth = 0.0;
    for (std::size_t j = 0; j < centers.size(); ++j) {
      const auto& c = centers[j];
      const std::string where = "landscape center " + std::to_string(j);
      if (c.position.size() != knobs) throw DimensionMismatch(where + ": position width does not match knob count");
      if (!(c.depth >= 0.0) || !std::isfinite(c.depth)) throw ValidationError(where + ": depth must be >= 0");
      if (!(c.radius > 0.0) || !std::isfinite(c.radius)) throw ValidationError(where + ": radius must be > 0");
      total_depth += c.depth;
    }
    if (!(total_depth < 1.0)) throw ValidationError("landscape depths must sum to less than 1");
    if (!(base_runtime > 0.0) || !std::isfinite(base_runtime)) throw ValidationError("base_runtime must be > 0");
    if (!(noise_rel >= 0.0 && noise_rel < 1.0)) throw ValidationError("noise_rel must lie in [0, 1)");
  }
};

/// Deterministic value in [-1, 1] for (seed, config).
inline double landscape_noise(std::uint64_t seed, const Configuration& config) {
  std::uint64_t h = splitmix64(seed ^ 0x5bd1e995a5a5a5a5ULL);
  for (std::size_t i : config.indices) h = splitmix64(h ^ static_cast<std::uint64_t>(i));
  return static_cast<double>(h >> 11) * 0x1.0p-53 * 2.0 - 1.0;
}

inline double synthetic_runtime(const SyntheticLandscape& land, const Configuration& config) {
  double pull = 0.0;
  for (const auto& c : land.centers) {
    double d2 = 0.0;
    for (std::size_t i = 0; i < config.size(); ++i) {
      const double d = static_cast<double>(config[i]) - c.position[i];
      d2 += d * d;
    }
    pull += c.depth * std::exp(-d2 / (c.radius * c.radius));
  }
  const double runtime = land.base_runtime * (1.0 - pull) * (1.0 + land.noise_rel * landscape_noise(land.seed, config));
  return std::max(runtime, 0.01 * land.base_runtime);
}

inline nlohmann::ordered_json to_json(const SyntheticLandscape& land, const DesignSpace& space) {
  nlohmann::ordered_json doc;
  doc["space"] = space.name();
  doc["seed"] = land.seed;
  doc["base_runtime"] = land.base_runtime;
  doc["noise_rel"] = land.noise_rel;
  doc["centers"] = nlohmann::ordered_json::array();
  for (const auto& c : land.centers) doc["centers"].push_back(c.position);
  doc["depths"] = nlohmann::ordered_json::array();
  for (const auto& c : land.centers) doc["depths"].push_back(c.depth);
  doc["radii"] = nlohmann::ordered_json::array();
  for (const auto& c : land.centers) doc["radii"].push_back(c.radius);
  return doc;
}

inline SyntheticLandscape landscape_from_json(const nlohmann::json& doc, const DesignSpace& space) {
  SyntheticLandscape land;
  try {
    land.seed = doc.at("seed").get<std::uint64_t>();
    land.base_runtime = doc.at("base_runtime").get<double>();
    land.noise_rel = doc.at("noise_rel").get<double>();
    const auto positions = doc.at("centers").get<std::vector<std::vector<double>>>();
    const auto depths = doc.at("depths").get<std::vector<double>>();
    const auto radii = doc.at("radii").get<std::vector<double>>();
    if (positions.size() != depths.size() || positions.size() != radii.size())
      throw ParseError("landscape: centers, depths and radii differ in length");
    for (std::size_t j = 0; j < positions.size(); ++j) land.centers.push_back({positions[j], depths[j], radii[j]});
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("landscape: ") + e.what());
  }
  land.validate(space.num_knobs());
  return land;
}

inline SyntheticLandscape load_landscape_file(const std::string& path, const DesignSpace& space) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(read_text_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError("landscape '" + path + "': " + e.what());
  }
  return landscape_from_json(doc, space);
}

/// Seeded landscape: one deep, wide basin (the optimum) plus shallower decoys.
struct LandscapeOptions {
  int decoys = 4;
  double optimum_depth = 0.6;
  double optimum_radius = 0.3;   // as a fraction of the mean knob span
  double decoy_depth_min = 0.05;
  double decoy_depth_max = 0.08;
  double decoy_radius_min = 0.1;
  double decoy_radius_max = 0.25;
  double base_runtime = 1e-3;
  double noise_rel = 0.02;
};

inline SyntheticLandscape generate_landscape(const DesignSpace& space, std::uint64_t seed,
                                             const LandscapeOptions& opt = {}) {
  Rng rng(derive_seed(seed, 0x1a2d5ca7eULL));
  double mean_span = 0.0;
  for (std::size_t i = 0; i < space.num_knobs(); ++i) mean_span += static_cast<double>(space.cardinality(i) - 1);
  mean_span = std::max(1.0, mean_span / static_cast<double>(space.num_knobs()));

  auto random_position = [&] {
    std::vector<double> p(space.num_knobs());
    for (std::size_t i = 0; i < p.size(); ++i) p[i] = static_cast<double>(rng.below(space.cardinality(i)));
    return p;
  };
  SyntheticLandscape land;
  land.seed = seed;
  land.base_runtime = opt.base_runtime;
  land.noise_rel = opt.noise_rel;
  land.centers.push_back({random_position(), opt.optimum_depth, opt.optimum_radius * mean_span});
  for (int j = 0; j < opt.decoys; ++j) {
    land.centers.push_back({random_position(), rng.uniform(opt.decoy_depth_min, opt.decoy_depth_max),
                            rng.uniform(opt.decoy_radius_min, opt.decoy_radius_max) * mean_span});
  }
  land.validate(space.num_knobs());
  return land;
}

struct OracleResult {
  Configuration best;
  double best_runtime = kFailedRuntime;
  std::uint64_t configurations = 0;
};

/// Brute-force minimum of a runtime function over an enumerable space.
template <class RuntimeFn>
OracleResult enumerate_oracle(const DesignSpace& space, RuntimeFn&& runtime,
                              std::uint64_t cap = kDefaultEnumerationCap) {
  OracleResult out;
  for (const auto& c : enumerate_space(space, cap)) {
    const double r = runtime(c);
    ++out.configurations;
    if (r < out.best_runtime) {
      out.best_runtime = r;
      out.best = c;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Backends

/// Produces one runtime per configuration (infinity marks a per-config
/// failure). Throws BackendUnavailable when the batch as a whole fails.
class MeasurementBackend {
 public:
  virtual ~MeasurementBackend() = default;
  virtual std::vector<double> run(const DesignSpace& space, std::span<const Configuration> configs) = 0;
  virtual std::string tag() const = 0;
};

class SyntheticBackend final : public MeasurementBackend {
 public:
  explicit SyntheticBackend(SyntheticLandscape landscape) : landscape_(std::move(landscape)) {}

  std::vector<double> run(const DesignSpace&, std::span<const Configuration> configs) override {
    std::vector<double> out;
    out.reserve(configs.size());
    for (const auto& c : configs) out.push_back(synthetic_runtime(landscape_, c));
    return out;
  }
  std::string tag() const override { return "synthetic"; }
  const SyntheticLandscape& landscape() const noexcept { return landscape_; }

 private:
  SyntheticLandscape landscape_;
};

/// Spawns `command` once per batch: {"knobs": [[values...], ...]} on stdin,
/// {"runtimes_s": [...]} expected on stdout, -1 marking a failed entry.
class ExternalBackend final : public MeasurementBackend {
 public:
  explicit ExternalBackend(std::string command, std::chrono::milliseconds timeout = std::chrono::seconds(600))
      : command_(std::move(command)), timeout_(timeout) {}

  std::vector<double> run(const DesignSpace& space, std::span<const Configuration> configs) override {
    nlohmann::json request;
    request["knobs"] = nlohmann::json::array();
    for (const auto& c : configs) request["knobs"].push_back(space.values_of(c));
    const CommandResult res = run_command(command_, request.dump() + "\n", timeout_);
    if (res.timed_out)
      throw BackendUnavailable("external backend '" + command_ + "' timed out after " +
                               std::to_string(timeout_.count()) + " ms");
    if (res.exit_status != 0)
      throw BackendUnavailable("external backend '" + command_ + "' exited with status " +
                               std::to_string(res.exit_status));
    std::vector<double> runtimes;
    try {
      runtimes = nlohmann::json::parse(res.output).at("runtimes_s").get<std::vector<double>>();
    } catch (const nlohmann::json::exception& e) {
      throw BackendUnavailable("external backend '" + command_ + "' produced unreadable output: " + e.what());
    }
    if (runtimes.size() != configs.size())
      throw BackendUnavailable("external backend returned " + std::to_string(runtimes.size()) +
                               " runtimes for " + std::to_string(configs.size()) + " configurations");
    for (double& r : runtimes)
      if (!(r > 0.0) || !std::isfinite(r)) r = kFailedRuntime;
    return runtimes;
  }
  std::string tag() const override { return "external"; }

 private:
  std::string command_;
  std::chrono::milliseconds timeout_;
};

/// Serves runtimes recorded in an earlier log. A configuration absent from
/// the log makes the batch fail.
class ReplayBackend final : public MeasurementBackend {
 public:
  explicit ReplayBackend(std::span<const MeasurementRecord> records) {
    for (const auto& r : records) runtimes_.emplace(r.config, r.runtime_s);
  }

  std::vector<double> run(const DesignSpace&, std::span<const Configuration> configs) override {
    std::vector<double> out;
    out.reserve(configs.size());
    for (const auto& c : configs) {
      auto it = runtimes_.find(c);
      if (it == runtimes_.end()) throw BackendUnavailable("replay log has no measurement for requested configuration");
      out.push_back(it->second);
    }
    return out;
  }
  std::string tag() const override { return "replay"; }

 private:
  std::unordered_map<Configuration, double, ConfigurationHash> runtimes_;
};

using Clock = std::function<double()>;

/// Timestamps of 0 keep logs byte-reproducible.
inline Clock fixed_clock(double t = 0.0) {
  return [t] { return t; };
}

inline Clock wall_clock() {
  return [] {
    return std::chrono::duration<double>(std::chrono::system_clock::now().time_since_epoch()).count();
  };
}

/// Measures a batch, appends every record to `log` and returns them in input order.
inline std::vector<MeasurementRecord> measure_batch(MeasurementBackend& backend, const DesignSpace& space,
                                                    std::span<const Configuration> configs,
                                                    std::int64_t iteration, MeasurementLog* log = nullptr,
                                                    const Clock& clock = fixed_clock()) {
  if (configs.empty()) throw InvalidArgument("measure_batch: empty batch");
  for (const auto& c : configs) space.check(c);
  const std::vector<double> runtimes = backend.run(space, configs);
  if (runtimes.size() != configs.size())
    throw BackendUnavailable("backend returned the wrong number of runtimes");
  const double stamp = clock();
  std::vector<MeasurementRecord> records;
  records.reserve(configs.size());
  for (std::size_t i = 0; i < configs.size(); ++i)
    records.push_back(MeasurementRecord::from_runtime(configs[i], runtimes[i], iteration, backend.tag(), stamp));
  if (log) log->append(records);
  return records;
}

}  // namespace knobtuner
