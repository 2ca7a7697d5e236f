#include <gtest/gtest.h>

#include <chrono>
#include <fstream>

#include "test_support.hpp"

using namespace knobtuner;
using kt_test::cfg;
using kt_test::make_space;
using kt_test::scratch_dir;

namespace {

/// Writes a python script that answers the batch protocol with fixed runtimes.
std::string fake_backend(const std::filesystem::path& dir, const std::string& body) {
  const auto path = dir / "fake.py";
  std::ofstream(path) << "import json, sys\nreq = json.load(sys.stdin)\n" << body << "\n";
  return "python3 " + path.string();
}

std::string read_file(const std::filesystem::path& p) { return read_text_file(p.string()); }

}  // namespace

TEST(SyntheticRuntime, AtCenterAndFarAway) {
  SyntheticLandscape land;
  land.base_runtime = 2e-3;
  land.centers.push_back({{3.0, 4.0}, 0.9, 1.0});
  EXPECT_DOUBLE_EQ(synthetic_runtime(land, cfg({3, 4})), 0.1 * 2e-3);
  EXPECT_DOUBLE_EQ(synthetic_runtime(land, cfg({300, 400})), 2e-3);
}

TEST(SyntheticRuntime, ClampedAndValidated) {
  SyntheticLandscape land;
  land.centers.push_back({{0.0}, 0.6, 1.0});
  land.centers.push_back({{0.0}, 0.395, 1.0});
  EXPECT_DOUBLE_EQ(synthetic_runtime(land, cfg({0})), 0.01 * land.base_runtime);
  land.centers.push_back({{0.0}, 0.1, 1.0});
  EXPECT_THROW(land.validate(1), ValidationError);
  EXPECT_NO_THROW(SyntheticLandscape{}.validate(1));
}

TEST(SyntheticBackend, PureFunctionOfConfig) {
  const DesignSpace space = make_space({10, 10, 10});
  SyntheticBackend backend(generate_landscape(space, 3));
  const std::vector<Configuration> batch{cfg({1, 2, 3}), cfg({4, 4, 4}), cfg({1, 2, 3})};
  const auto records = measure_batch(backend, space, batch, 0);
  EXPECT_EQ(records[0].runtime_s, records[2].runtime_s);
  const std::vector<Configuration> alone{cfg({4, 4, 4})};
  EXPECT_EQ(measure_batch(backend, space, alone, 5)[0].runtime_s, records[1].runtime_s);
  for (const auto& r : records) {
    EXPECT_FALSE(r.failed);
    EXPECT_EQ(r.fitness, 1.0 / r.runtime_s);
    EXPECT_EQ(r.backend, "synthetic");
  }
}

TEST(SyntheticBackend, FixtureOptimumMatchesNestedLoopOracle) {
  const DesignSpace space = load_space_file(kt_test::source_path("spaces/fixture_3d.json"));
  const SyntheticLandscape land = load_landscape_file(kt_test::source_path("landscapes/fixture_3d.json"), space);
  double best = 1e300;
  Configuration arg;
  for (std::size_t a = 0; a < 10; ++a)
    for (std::size_t b = 0; b < 10; ++b)
      for (std::size_t c = 0; c < 10; ++c) {
        const double r = synthetic_runtime(land, cfg({a, b, c}));
        if (r < best) best = r, arg = cfg({a, b, c});
      }
  const OracleResult oracle = enumerate_oracle(space, [&](const Configuration& c) { return synthetic_runtime(land, c); });
  EXPECT_EQ(oracle.configurations, 1000u);
  EXPECT_EQ(oracle.best, arg);
  EXPECT_EQ(oracle.best_runtime, best);
  for (const auto& c : enumerate_space(space)) EXPECT_GT(synthetic_runtime(land, c), 0.0);
}

TEST(MeasureBatch, RejectsEmptyAndForeignConfigs) {
  const DesignSpace space = make_space({3});
  SyntheticBackend backend(generate_landscape(space, 0));
  EXPECT_THROW(measure_batch(backend, space, std::vector<Configuration>{}, 0), InvalidArgument);
  EXPECT_THROW(measure_batch(backend, space, std::vector<Configuration>{cfg({3})}, 0), std::exception);
}

TEST(ExternalBackend, FitnessIsInverseRuntime) {
  const auto dir = scratch_dir("external_ok");
  const DesignSpace space = make_space({4, 4});
  ExternalBackend backend(fake_backend(dir, "print(json.dumps({'runtimes_s': [0.5, 0.25]}))"));
  const auto records = measure_batch(backend, space, std::vector<Configuration>{cfg({0, 1}), cfg({2, 3})}, 1);
  EXPECT_EQ(records[0].fitness, 2.0);
  EXPECT_EQ(records[1].fitness, 4.0);
  EXPECT_EQ(records[0].backend, "external");
}

TEST(ExternalBackend, SendsKnobValuesAndMarksFailures) {
  const auto dir = scratch_dir("external_values");
  const DesignSpace space("v", {{"a", {8, 16, 32}}, {"b", {-1, 5}}});
  ExternalBackend backend(fake_backend(
      dir, "print(json.dumps({'runtimes_s': [-1 if k == [32, 5] else 0.1 for k in req['knobs']]}))"));
  const auto records = measure_batch(backend, space, std::vector<Configuration>{cfg({2, 1}), cfg({0, 0})}, 0);
  EXPECT_TRUE(records[0].failed);
  EXPECT_EQ(records[0].fitness, 0.0);
  EXPECT_EQ(records[0].runtime_s, kFailedRuntime);
  EXPECT_FALSE(records[1].failed);
}

TEST(ExternalBackend, ExitStatusTimeoutAndGarbage) {
  const auto dir = scratch_dir("external_bad");
  const DesignSpace space = make_space({2});
  const std::vector<Configuration> one{cfg({0})};
  ExternalBackend dead(fake_backend(dir, "sys.exit(3)"));
  EXPECT_THROW(measure_batch(dead, space, one, 0), BackendUnavailable);
  ExternalBackend slow("sleep 5", std::chrono::milliseconds(200));
  const auto start = std::chrono::steady_clock::now();
  EXPECT_THROW(measure_batch(slow, space, one, 0), BackendUnavailable);
  EXPECT_LT(std::chrono::steady_clock::now() - start, std::chrono::seconds(4));
  ExternalBackend garbage("echo nonsense");
  EXPECT_THROW(measure_batch(garbage, space, one, 0), BackendUnavailable);
  ExternalBackend short_answer("echo '{\"runtimes_s\": []}'");
  EXPECT_THROW(measure_batch(short_answer, space, one, 0), BackendUnavailable);
}

TEST(MeasurementLog, RoundTripAndAppendOnly) {
  const auto dir = scratch_dir("log");
  const auto path = (dir / "log.jsonl").string();
  const DesignSpace space = make_space({5, 5});
  SyntheticBackend backend(generate_landscape(space, 1));
  std::vector<MeasurementRecord> all;
  {
    MeasurementLog log(path);
    auto a = measure_batch(backend, space, std::vector<Configuration>{cfg({0, 0}), cfg({1, 2})}, 0, &log);
    all.insert(all.end(), a.begin(), a.end());
  }
  const std::string first = read_file(path);
  {
    MeasurementLog log(path);
    auto b = measure_batch(backend, space, std::vector<Configuration>{cfg({4, 4})}, 1, &log, fixed_clock(7.5));
    all.insert(all.end(), b.begin(), b.end());
  }
  const std::string second = read_file(path);
  EXPECT_EQ(second.substr(0, first.size()), first);
  EXPECT_EQ(load_log(path), all);
  EXPECT_EQ(all.back().timestamp, 7.5);
  EXPECT_EQ(all.back().iteration, 1);
}

TEST(MeasurementLog, FailedRecordRoundTrips) {
  const auto r = MeasurementRecord::from_runtime(cfg({1, 0}), -1.0, 4, "external", 0.0);
  EXPECT_TRUE(r.failed);
  const std::string line = to_json_line(r);
  EXPECT_NE(line.find("\"runtime_s\":null"), std::string::npos);
  EXPECT_EQ(record_from_json_line(line), r);
}

TEST(MeasurementLog, CorruptLineIsReported) {
  const auto dir = scratch_dir("log_corrupt");
  const auto path = (dir / "log.jsonl").string();
  const auto good = to_json_line(MeasurementRecord::from_runtime(cfg({0}), 1.0, 0, "synthetic", 0.0));
  std::ofstream(path) << good << "\n" << good << "\n{\"config\": [0], \"runtime_s\"\n";
  try {
    load_log(path);
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos) << e.what();
  }
  EXPECT_THROW(load_log((dir / "missing.jsonl").string()), ParseError);
}

TEST(ReplayBackend, ServesLoggedRuntimesOnly) {
  const std::vector<MeasurementRecord> log{MeasurementRecord::from_runtime(cfg({1}), 0.5, 0, "synthetic", 0.0),
                                           MeasurementRecord::from_runtime(cfg({2}), -1.0, 0, "synthetic", 0.0)};
  const DesignSpace space = make_space({4});
  ReplayBackend replay(log);
  const auto records = measure_batch(replay, space, std::vector<Configuration>{cfg({2}), cfg({1})}, 0);
  EXPECT_TRUE(records[0].failed);
  EXPECT_EQ(records[1].runtime_s, 0.5);
  EXPECT_THROW(measure_batch(replay, space, std::vector<Configuration>{cfg({3})}, 0), BackendUnavailable);
}

TEST(Landscape, JsonRoundTripAndGeneratorDeterminism) {
  const DesignSpace space = make_space({6, 7});
  const SyntheticLandscape a = generate_landscape(space, 12);
  EXPECT_EQ(generate_landscape(space, 12).centers, a.centers);
  const SyntheticLandscape b = landscape_from_json(nlohmann::json::parse(to_json(a, space).dump()), space);
  EXPECT_EQ(b.centers, a.centers);
  EXPECT_EQ(b.seed, a.seed);
  EXPECT_THROW(landscape_from_json(nlohmann::json::parse(to_json(a, space).dump()), make_space({6})),
               DimensionMismatch);
}
