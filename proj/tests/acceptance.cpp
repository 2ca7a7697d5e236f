// Acceptance suite: one PASS/FAIL line per primary criterion. Exits non-zero
// when any criterion fails.

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <numeric>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "test_support.hpp"

using namespace knobtuner;
using kt_test::cfg;
using kt_test::make_space;
using kt_test::scratch_dir;
using kt_test::source_path;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void report(const std::string& name, const std::function<Verdict()>& check) {
  Verdict v;
  try {
    v = check();
  } catch (const std::exception& e) {
    v = {false, std::string("exception: ") + e.what()};
  }
  if (!v.pass) ++failures;
  std::cout << (v.pass ? "PASS " : "FAIL ") << name << ": " << v.detail << std::endl;
}

std::string fmt(const char* pattern, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, pattern, a);
  return buf;
}

int run_cli(const std::string& args) {
  const int raw = std::system((std::string(KNOBTUNER_CLI) + " " + args + " > /dev/null 2>&1").c_str());
  return WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
}

// ---------------------------------------------------------------------------
// Strategy arms on the five fixture landscapes.

struct ArmRun {
  double gap = 0.0;
  std::size_t reach10 = 0;  // 0: never within 10%
  double seconds = 0.0;
};

struct SeedRuns {
  double oracle = 0.0;
  ArmRun sa, sa_as, rl, rl_as;
};

DesignSpace fixture_space() { return load_space_file(source_path("spaces/fixture_4d.json")); }

SyntheticLandscape fixture_landscape(const DesignSpace& space, int seed) {
  return load_landscape_file(source_path("landscapes/fixture_s" + std::to_string(seed) + ".json"), space);
}

const std::vector<SeedRuns>& arm_runs() {
  static const std::vector<SeedRuns> runs = [] {
    std::vector<SeedRuns> out;
    const DesignSpace space = fixture_space();
    for (int seed = 1; seed <= 5; ++seed) {
      const SyntheticLandscape land = fixture_landscape(space, seed);
      SeedRuns s;
      s.oracle =
          enumerate_oracle(space, [&](const Configuration& c) { return synthetic_runtime(land, c); }).best_runtime;
      auto arm = [&](Strategy strategy) {
        TuningTask task(space);
        task.strategy = strategy;
        task.budget = 1000;
        SyntheticBackend backend(land);
        const auto start = std::chrono::steady_clock::now();
        const TuningResult r = tune(task, backend);
        ArmRun a;
        a.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        a.gap = r.best_runtime_s / s.oracle - 1.0;
        a.reach10 = measurements_to_reach(r.records, s.oracle, 0.10);
        return a;
      };
      s.sa = arm(Strategy::Sa);
      s.sa_as = arm(Strategy::SaAs);
      s.rl = arm(Strategy::Rl);
      s.rl_as = arm(Strategy::RlAs);
      out.push_back(s);
    }
    return out;
  }();
  return runs;
}

Verdict oracle_optimality() {
  int hits = 0;
  double slowest = 0.0;
  std::string detail;
  for (std::size_t i = 0; i < arm_runs().size(); ++i) {
    const ArmRun& a = arm_runs()[i].rl_as;
    if (a.gap <= 0.05) ++hits;
    slowest = std::max(slowest, a.seconds);
    detail += " s" + std::to_string(i + 1) + " gap " + fmt("%.4f", a.gap) + " (" + fmt("%.1f", a.seconds) + " s)";
  }
  return {hits >= 4 && slowest < 60.0, std::to_string(hits) + "/5 within 5%, slowest " + fmt("%.1f", slowest) +
                                           " s;" + detail};
}

Verdict fewer_measurements() {
  // A run that never gets within 10% counts as needing more than the budget.
  auto need = [](const ArmRun& a) { return a.reach10 ? static_cast<double>(a.reach10) : 1001.0; };
  int sa_wins = 0, rl_wins = 0;
  std::string detail;
  for (std::size_t i = 0; i < arm_runs().size(); ++i) {
    const SeedRuns& s = arm_runs()[i];
    const double sa_ratio = need(s.sa) / need(s.sa_as), rl_ratio = need(s.rl) / need(s.rl_as);
    sa_wins += sa_ratio >= 1.5;
    rl_wins += rl_ratio >= 1.5;
    detail += " s" + std::to_string(i + 1) + " sa/sa+as " + fmt("%.0f", need(s.sa)) + "/" + fmt("%.0f", need(s.sa_as)) +
              " rl/rl+as " + fmt("%.0f", need(s.rl)) + "/" + fmt("%.0f", need(s.rl_as)) + ";";
  }
  return {sa_wins >= 4 && rl_wins >= 4, "sa+as " + std::to_string(sa_wins) + "/5, rl+as " + std::to_string(rl_wins) +
                                            "/5 seeds at >= 1.5x;" + detail};
}

// ---------------------------------------------------------------------------

Verdict fewer_search_steps() {
  const DesignSpace space = fixture_space();
  constexpr int kRounds = 16;
  int wins = 0;
  std::string detail;
  for (int seed = 1; seed <= 5; ++seed) {
    const SyntheticLandscape land = fixture_landscape(space, seed);
    Rng rng(derive_seed(static_cast<std::uint64_t>(seed), 1));
    TrainingSet training;
    for (int i = 0; i < 512; ++i) {
      const Configuration c = space.random_config(rng);
      training.add(featurize(space, c), 1.0 / synthetic_runtime(land, c));
    }
    const CostModel model = fit(training);
    Agent agent = init_agent(space, {}, derive_seed(static_cast<std::uint64_t>(seed), 2));
    const SAParams sa;
    double rl_steps = 0.0, sa_steps = 0.0;
    for (int round = 0; round < kRounds; ++round) {
      std::vector<Configuration> starts;
      for (int i = 0; i < 64; ++i) starts.push_back(space.random_config(rng));
      const SearchOutcome rl = run_search_round(agent, model, space, starts);
      const SAOutcome sa_out =
          run_sa_round(sa, model, space, starts, derive_seed(static_cast<std::uint64_t>(seed), 100 + round));
      rl_steps += static_cast<double>(steps_to_convergence(rl.best_by_step));
      sa_steps += static_cast<double>(steps_to_convergence(sa_out.best_by_step));
    }
    rl_steps /= kRounds;
    sa_steps /= kRounds;
    wins += rl_steps <= sa_steps;
    detail += " s" + std::to_string(seed) + " " + fmt("%.2f", rl_steps) + "/" + fmt("%.2f", sa_steps);
  }
  return {wins >= 4, std::to_string(wins) + "/5 seeds with RL <= SA mean steps (rl/sa):" + detail};
}

Verdict sampler_suite() {
  std::vector<std::string> problems;
  const std::vector<Point> four{{0.0}, {1.0}, {10.0}, {11.0}};
  for (std::uint64_t seed = 0; seed < 10; ++seed)
    if (kmeans(four, 2, seed).loss != 1.0) problems.push_back("{0,1,10,11} loss != 1.0");

  Rng rng(2718);
  std::size_t iterations_checked = 0, batches = 0, knees = 0;
  for (int trial = 0; trial < 60; ++trial) {
    std::vector<Point> pts;
    for (int i = 0; i < 120; ++i)
      pts.push_back({double(rng.below(16)), double(rng.below(16)), double(rng.below(8))});
    const ClusteringResult r = kmeans(pts, 2 + rng.below(20), static_cast<std::uint64_t>(trial));
    for (std::size_t i = 1; i < r.loss_history.size(); ++i, ++iterations_checked)
      if (r.loss_history[i] > r.loss_history[i - 1]) problems.push_back("Lloyd loss increased");

    const DesignSpace space = make_space({1 + rng.below(16), 1 + rng.below(16), 1 + rng.below(16), 1 + rng.below(4)});
    Trajectory t;
    const std::size_t n = 1 + rng.below(600);
    for (std::size_t i = 0; i < n; ++i) t.add(space.random_config(rng), 0.0);
    VisitedSet visited;
    for (int i = 0; i < 50; ++i) visited.insert(space.random_config(rng));
    const SampleBatch b = adaptive_sample(t, visited, space, static_cast<std::uint64_t>(trial));
    ++batches;
    std::set<Configuration> seen;
    for (const auto& c : b.configs) {
      if (visited.contains(c)) problems.push_back("visited configuration in batch");
      if (!seen.insert(c).second) problems.push_back("duplicate configuration in batch");
    }
    if (b.distinct_inputs > 8) {
      ++knees;
      if (b.chosen_k < 8 || b.chosen_k >= 64) problems.push_back("knee k outside [8, 64)");
    }
  }
  if (!problems.empty()) return {false, problems.front() + " (" + std::to_string(problems.size()) + " problems)"};
  return {true, "{0,1,10,11} loss 1.0; " + std::to_string(iterations_checked) + " Lloyd steps non-increasing; " +
                    std::to_string(batches) + " batches clean; " + std::to_string(knees) + " knees in [8, 64)"};
}

Verdict ppo_gradient() {
  const DesignSpace space = make_space({5, 4});
  AgentHyperparams h;
  h.shared_width = 4;
  h.head_width = 4;
  Agent agent = init_agent(space, h, 3);
  Rng rng(17);
  for (double& w : agent.params) w += rng.uniform(-0.3, 0.3);
  Rollout r;
  const std::vector<Configuration> path{cfg({1, 1}), cfg({2, 1}), cfg({2, 2})};
  const std::vector<Action> actions{Action{{1, 0}}, Action{{0, 1}}, Action{{-1, -1}}};
  for (std::size_t i = 0; i < 3; ++i) {
    r.states.push_back(encode_state(space, path[i]));
    const PolicyOutput out = evaluate(agent, r.states.back());
    r.actions.push_back(actions[i]);
    r.values.push_back(out.value);
    r.log_probs.push_back(action_log_prob(out.probs, actions[i]));
    r.rewards.push_back(static_cast<double>(i * i) + 0.5);
  }
  r.log_probs[1] -= 0.6;
  r.log_probs[2] += 0.1;
  r.episode_boundaries = {3};
  r.bootstrap_values = {0.25};
  const PpoBatch batch = prepare_batch(r, h);
  const std::vector<std::size_t> rows{0, 1, 2};
  std::vector<double> grad(agent.params.size(), 0.0);
  ppo_objective(agent.shape, agent.params, batch, rows, h, grad);
  std::vector<double> theta = agent.params;
  double worst = 0.0;
  for (std::size_t i = 0; i < theta.size(); ++i) {
    const double saved = theta[i];
    theta[i] = saved + 1e-5;
    const double up = ppo_objective(agent.shape, theta, batch, rows, h).total;
    theta[i] = saved - 1e-5;
    const double down = ppo_objective(agent.shape, theta, batch, rows, h).total;
    theta[i] = saved;
    const double numeric = (up - down) / 2e-5;
    worst = std::max(worst, std::abs(grad[i] - numeric) / std::max({std::abs(grad[i]), std::abs(numeric), 1e-6}));
  }
  return {worst < 1e-4, std::to_string(theta.size()) + " parameters, max relative error " + fmt("%.3g", worst)};
}

Verdict gae() {
  const auto two = compute_gae(std::vector<double>{1, 1}, std::vector<double>{0, 0}, 0.0, 0.9, 0.99);
  bool ok = std::abs(two[0] - 1.891) <= 1e-9 && std::abs(two[1] - 1.0) <= 1e-9;
  const std::vector<double> rw{0.5, -1.0, 2.0, 3.5}, v{0.1, 0.7, -0.3, 1.2};
  const auto g0 = compute_gae(rw, v, 0.4, 0.0, 0.95);
  const auto l0 = compute_gae(rw, v, 0.4, 0.9, 0.0);
  for (std::size_t t = 0; t < rw.size(); ++t) {
    const double next = t + 1 < rw.size() ? v[t + 1] : 0.4;
    ok &= std::abs(g0[t] - (rw[t] - v[t])) <= 1e-12;
    ok &= std::abs(l0[t] - (rw[t] + 0.9 * next - v[t])) <= 1e-12;
  }
  return {ok, "two-step [" + fmt("%.12g", two[0]) + ", " + fmt("%.12g", two[1]) + "]; gamma=0 and lambda=0 identities"};
}

Verdict determinism() {
  const auto dir = scratch_dir("acceptance_determinism");
  const DesignSpace space = load_space_file(source_path("spaces/fixture_3d.json"));
  TuningTask task(space);
  task.budget = 200;
  task.seed = 7;
  BackendSpec backend{BackendSpec::Kind::Synthetic, source_path("landscapes/fixture_3d.json")};
  std::ofstream(dir / "task.json") << to_json(task, backend).dump(2);
  const std::string task_file = (dir / "task.json").string();
  for (const char* run : {"a", "b"})
    if (run_cli("tune --task " + task_file + " --out " + (dir / run).string()) != 0)
      return {false, "tune failed for run " + std::string(run)};
  const std::string a = read_text_file((dir / "a" / "log.jsonl").string());
  const std::string b = read_text_file((dir / "b" / "log.jsonl").string());
  if (a.empty() || a != b) return {false, "logs differ between identical runs"};
  if (run_cli("tune --task " + task_file + " --backend replay:" + (dir / "a" / "log.jsonl").string() + " --out " +
              (dir / "replay").string()) != 0)
    return {false, "replay run failed"};
  const auto best = [&](const char* run) {
    return nlohmann::json::parse(read_text_file((dir / run / "summary.json").string())).at("best_config");
  };
  if (best("a") != best("replay")) return {false, "replay best_config differs"};
  return {true, "byte-identical logs (" + std::to_string(std::count(a.begin(), a.end(), '\n')) +
                    " records); replay best_config " + best("a").dump()};
}

Verdict boosted_trees() {
  const DesignSpace space = fixture_space();
  const SyntheticLandscape land = fixture_landscape(space, 1);
  Rng rng(5);
  TrainingSet training;
  for (int i = 0; i < 300; ++i) {
    const Configuration c = space.random_config(rng);
    training.add(featurize(space, c), 1.0 / synthetic_runtime(land, c));
  }
  double previous = std::numeric_limits<double>::infinity();
  for (int rounds = 1; rounds <= 60; ++rounds) {
    BoostParams p;
    p.rounds = rounds;
    const double rmse = training_rmse(fit(training, p), training);
    if (rmse > previous) return {false, "RMSE rose at round " + std::to_string(rounds)};
    previous = rmse;
  }

  TrainingSet constant;
  for (int i = 0; i < 50; ++i) constant.add({rng.uniform01(), rng.uniform01()}, 3.25);
  const CostModel flat = fit(constant);
  for (int i = 0; i < 50; ++i)
    if (flat.predict_features(std::vector<double>{rng.uniform(-9, 9), rng.uniform(-9, 9)}) != 3.25)
      return {false, "constant target not reproduced"};

  TrainingSet shuffled = training;
  std::reverse(shuffled.rows.begin(), shuffled.rows.end());
  for (std::size_t i = shuffled.rows.size(); i > 1; --i) std::swap(shuffled.rows[i - 1], shuffled.rows[rng.below(i)]);
  if (to_json(fit(shuffled)).dump() != to_json(fit(training)).dump()) return {false, "fit depends on row order"};
  return {true, "RMSE non-increasing over 60 rounds (final " + fmt("%.4g", previous) +
                    "); constant target exact; row-order invariant"};
}

/// comparison.csv with the wall-time column blanked.
std::string mask_wall_time(const std::string& csv) {
  std::istringstream in(csv);
  std::string out, line;
  std::size_t column = std::string::npos;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') {
      out += line + "\n";
      continue;
    }
    std::vector<std::string> cells;
    std::stringstream fields(line);
    for (std::string c; std::getline(fields, c, ',');) cells.push_back(c);
    if (!line.empty() && line.back() == ',') cells.push_back("");
    if (column == std::string::npos) {
      column = static_cast<std::size_t>(std::find(cells.begin(), cells.end(), "wall_time_s") - cells.begin());
    } else if (column < cells.size()) {
      cells[column] = "*";
    }
    for (std::size_t i = 0; i < cells.size(); ++i) out += (i ? "," : "") + cells[i];
    out += "\n";
  }
  return out;
}

Verdict golden_comparison() {
  const auto dir = scratch_dir("acceptance_golden");
  const std::string args = "compare --space " + source_path("spaces/fixture_3d.json") + " --backend synthetic:" +
                           source_path("landscapes/fixture_3d.json") + " --budget 300 --seed 3 --out " +
                           dir.string();
  if (run_cli(args) != 0) return {false, "compare failed"};
  for (const char* s : {"sa", "sa+as", "rl", "rl+as"})
    if (!std::filesystem::exists(dir / s / "summary.json")) return {false, std::string("missing summary for ") + s};
  const std::string got = mask_wall_time(read_text_file((dir / "comparison.csv").string()));
  const auto golden = std::filesystem::path(source_path("tests/golden/comparison.csv"));
  if (!std::filesystem::exists(golden)) {
    std::ofstream(dir / "candidate.csv") << got;
    return {false, "no golden file; candidate written to " + (dir / "candidate.csv").string()};
  }
  const std::string want = read_text_file(golden.string());
  if (got != want) {
    std::ofstream(dir / "candidate.csv") << got;
    return {false, "comparison.csv differs from golden; see " + (dir / "candidate.csv").string()};
  }
  return {true, "four summaries; comparison.csv matches golden (wall_time_s masked)"};
}

}  // namespace

int main() {
  report("oracle optimality (rl+as within 5% on >= 4/5 fixtures, < 60 s each)", oracle_optimality);
  report("search steps (RL <= SA mean steps-to-convergence on >= 4/5 fixtures)", fewer_search_steps);
  report("measurement reduction (AS arms >= 1.5x fewer measurements to 10% on >= 4/5 fixtures)", fewer_measurements);
  report("adaptive sampler suite", sampler_suite);
  report("PPO gradient vs central differences", ppo_gradient);
  report("GAE", gae);
  report("determinism and replay", determinism);
  report("boosted-tree suite", boosted_trees);
  report("end-to-end comparison regression", golden_comparison);
  std::cout << (failures ? std::to_string(failures) + " criteria failed" : std::string("all criteria passed"))
            << std::endl;
  return failures ? 1 : 0;
}
