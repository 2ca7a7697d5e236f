#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "test_support.hpp"

using namespace knobtuner;
using kt_test::cfg;

namespace {

std::vector<MeasurementRecord> log_of(const std::vector<double>& runtimes) {
  std::vector<MeasurementRecord> out;
  for (std::size_t i = 0; i < runtimes.size(); ++i)
    out.push_back(MeasurementRecord::from_runtime(cfg({i}), runtimes[i], 0, "synthetic", 0.0));
  return out;
}

RunData run_of(std::string strategy, const std::vector<double>& runtimes, std::vector<std::size_t> steps = {}) {
  RunData r;
  r.strategy = std::move(strategy);
  r.task_key = "task";
  r.records = log_of(runtimes);
  r.round_stats.push_back({});
  for (std::size_t i = 0; i < steps.size(); ++i) {
    RoundStats s;
    s.round = static_cast<std::int64_t>(i + 1);
    s.steps_to_convergence = steps[i];
    r.round_stats.push_back(s);
  }
  return r;
}

double dist(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

/// Mean silhouette with known labels, straight from the definition.
double silhouette(const std::vector<std::vector<double>>& pts, const std::vector<int>& label) {
  double total = 0.0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    double same = 0.0, other = 0.0;
    int n_same = 0, n_other = 0;
    for (std::size_t j = 0; j < pts.size(); ++j) {
      if (i == j) continue;
      const double d = dist(pts[i], pts[j]);
      if (label[i] == label[j]) same += d, ++n_same;
      else other += d, ++n_other;
    }
    const double a = same / n_same, b = other / n_other;
    total += (b - a) / std::max(a, b);
  }
  return total / static_cast<double>(pts.size());
}

std::vector<std::vector<double>> as_vectors(const std::vector<Point2>& xy) {
  std::vector<std::vector<double>> out;
  for (const auto& p : xy) out.push_back({p[0], p[1]});
  return out;
}

}  // namespace

TEST(BestSoFar, PrefixBestFitness) {
  const Curve c = best_so_far_curve(log_of({2.0, 1.0, 1.5}));
  ASSERT_EQ(c.points.size(), 3u);
  EXPECT_EQ(c.points[0].best_fitness, 0.5);
  EXPECT_EQ(c.points[1].best_fitness, 1.0);
  EXPECT_EQ(c.points[2].best_fitness, 1.0);
  EXPECT_EQ(c.points[2].measurement, 3u);
}

TEST(BestSoFar, SingleAllFailedAndEmpty) {
  const Curve one = best_so_far_curve(log_of({0.25}));
  ASSERT_EQ(one.points.size(), 1u);
  EXPECT_EQ(one.points[0].measurement, 1u);
  EXPECT_EQ(one.points[0].best_fitness, 4.0);
  const Curve failed = best_so_far_curve(log_of({-1.0, -1.0}));
  EXPECT_TRUE(failed.all_failed);
  EXPECT_TRUE(failed.points.empty());
  EXPECT_THROW(best_so_far_curve(std::vector<MeasurementRecord>{}), InvalidArgument);
}

TEST(StepsToConvergence, WindowedStall) {
  const std::vector<double> flat{1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1};
  EXPECT_EQ(steps_to_convergence(flat, 8), 0u);
  const std::vector<double> late{1, 2, 3, 3, 3, 3, 3, 3, 3, 3, 3, 3, 3};
  EXPECT_EQ(steps_to_convergence(late, 8), 2u);
}

TEST(CompareRuns, IdenticalRunsHaveZeroDeltas) {
  const std::vector<RunData> runs{run_of("sa", {2.0, 1.0, 0.5}, {4, 6}), run_of("sa", {2.0, 1.0, 0.5}, {4, 6})};
  const ComparisonTable t = compare_runs(runs, 0.5);
  for (const auto& row : t.rows) {
    EXPECT_EQ(row.delta_measurements, 0);
    EXPECT_EQ(row.delta_best_fitness, 0.0);
    EXPECT_EQ(row.best_fitness, 2.0);
    EXPECT_EQ(*row.optimality_gap, 0.0);
    EXPECT_EQ(*row.measurements_to_10pct, 3u);
    EXPECT_EQ(row.mean_steps_to_convergence, 5.0);
  }
}

TEST(CompareRuns, DeltasGapsAndErrors) {
  const std::vector<RunData> runs{run_of("sa", {2.0, 1.0, 1.0, 1.0}), run_of("sa+as", {2.0, 0.5})};
  const ComparisonTable t = compare_runs(runs, 0.5);
  EXPECT_EQ(t.rows[1].delta_measurements, -2);
  EXPECT_EQ(t.rows[1].delta_best_fitness, 1.0);
  EXPECT_EQ(*t.rows[0].optimality_gap, 1.0);
  EXPECT_FALSE(t.rows[0].measurements_to_10pct.has_value());
  EXPECT_EQ(*t.rows[1].measurements_to_10pct, 2u);
  EXPECT_FALSE(compare_runs(runs).rows[0].optimality_gap.has_value());

  EXPECT_THROW(compare_runs(std::span<const RunData>(runs.data(), 1)), InvalidArgument);
  std::vector<RunData> mixed = runs;
  mixed[1].task_key = "other";
  EXPECT_THROW(compare_runs(mixed), InvalidArgument);
}

TEST(CompareRuns, CsvAndTextRendering) {
  const std::vector<RunData> runs{run_of("sa", {2.0, 1.0}), run_of("rl+as", {0.5})};
  const ComparisonTable t = compare_runs(runs, 0.5);
  const std::string csv = comparison_csv(t);
  std::istringstream in(csv);
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, kComparisonSchema);
  std::getline(in, line);
  EXPECT_EQ(line,
            "strategy,measurements,wall_time_s,best_fitness,optimality_gap,measurements_to_10pct,"
            "mean_steps_to_convergence,delta_measurements,delta_best_fitness");
  std::getline(in, line);
  EXPECT_EQ(line, "sa,2,0,1,1,,0,0,0");
  std::getline(in, line);
  EXPECT_EQ(line, "rl+as,1,0,2,0,1,0,-1,1");
  EXPECT_EQ(comparison_csv(t), csv);

  const std::string text = comparison_text(t);
  EXPECT_NE(text.find("strategy  measurements"), std::string::npos);

  const std::string curve = curve_csv(best_so_far_curve(runs[0].records));
  EXPECT_EQ(curve, std::string(kCurveSchema) + "\nmeasurement,best_fitness\n1,0.5\n2,1\n");
}

TEST(Pca, TwoDimensionalDataKeepsDistances) {
  std::mt19937_64 gen(5);
  std::normal_distribution<double> wide(0.0, 3.0), narrow(0.0, 1.0);
  std::vector<Point> pts;
  for (int i = 0; i < 60; ++i) pts.push_back({wide(gen) + 4.0, narrow(gen) - 1.0});
  const auto xy = pca_project(pts);
  for (std::size_t i = 0; i < pts.size(); ++i)
    for (std::size_t j = i + 1; j < pts.size(); ++j)
      EXPECT_NEAR(dist({xy[i][0], xy[i][1]}, {xy[j][0], xy[j][1]}), dist(pts[i], pts[j]), 1e-6);
}

TEST(Pca, AxisAlignedDataFollowsSignConvention) {
  const std::vector<Point> pts{{-4, 0}, {4, 0}, {0, 1}, {0, -1}};
  const auto xy = pca_project(pts);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    EXPECT_NEAR(xy[i][0], pts[i][0], 1e-9);
    EXPECT_NEAR(xy[i][1], pts[i][1], 1e-9);
  }
}

TEST(Pca, DistinctPointsAndErrors) {
  const std::vector<Configuration> two{cfg({1, 5}), cfg({3, 2})};
  const auto xy = pca_project(two);
  EXPECT_NE(xy[0][0], xy[1][0]);
  EXPECT_THROW(pca_project(std::vector<Configuration>{cfg({1, 2})}), InvalidArgument);
  EXPECT_THROW(pca_project(std::vector<Configuration>{cfg({1}), cfg({2})}), InvalidArgument);
  EXPECT_THROW(pca_project(std::vector<Configuration>{cfg({1, 2}), cfg({1, 2})}), InvalidArgument);
}

TEST(Pca, SeparatedClustersStaySeparated) {
  std::mt19937_64 gen(11);
  std::uniform_int_distribution<int> jitter(-2, 2);
  std::vector<Configuration> configs;
  std::vector<std::vector<double>> original;
  std::vector<int> label;
  for (int i = 0; i < 100; ++i) {
    const int l = i % 2;
    std::vector<std::size_t> idx;
    for (int d = 0; d < 8; ++d) idx.push_back(static_cast<std::size_t>((l ? 14 : 4) + jitter(gen)));
    configs.push_back(cfg(idx));
    original.emplace_back(idx.begin(), idx.end());
    label.push_back(l);
  }
  const double s = silhouette(as_vectors(pca_project(configs)), label);
  EXPECT_GT(s, 0.6) << "8-D silhouette " << silhouette(original, label);
}

TEST(Pca, FirstComponentCarriesMoreVariance) {
  std::mt19937_64 gen(3);
  std::uniform_int_distribution<int> u(0, 9);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<Point> pts;
    for (int i = 0; i < 40; ++i) pts.push_back({double(u(gen)), double(u(gen) * 2), double(u(gen)), double(u(gen))});
    const auto xy = pca_project(pts);
    double v1 = 0.0, v2 = 0.0;
    for (const auto& p : xy) v1 += p[0] * p[0], v2 += p[1] * p[1];
    EXPECT_GE(v1, v2 - 1e-9);
    double dot = 0.0;
    for (const auto& p : xy) dot += p[0] * p[1];
    EXPECT_NEAR(dot, 0.0, 1e-6 * (v1 + v2));
  }
}

TEST(Projection, CsvLayout) {
  const std::vector<ProjectionRow> rows{{"sa", 1, {0.5, -2.0}, 4.0}};
  EXPECT_EQ(projection_csv(rows),
            std::string(kProjectionSchema) + "\nstrategy,measurement,pc1,pc2,fitness\nsa,1,0.5,-2,4\n");
}
