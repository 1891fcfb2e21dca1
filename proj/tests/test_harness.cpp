#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "eerk/harness.hpp"

namespace {

using namespace eerk;

ConvergenceRow row(double k, double e) {
  ConvergenceRow r;
  r.k = k;
  r.error_max = e;
  r.wall_seconds = 0.125;
  r.krylov_iters = 17;
  return r;
}

RunConfig small_run() {
  RunConfig cfg;
  cfg.nx = 60;
  cfg.ks = {0.1, 0.05};
  return cfg;
}

TEST(Orders, HalvedStepsizes) {
  std::vector<ConvergenceRow> rows{row(0.1, 1e-2), row(0.05, 2.5e-3)};
  fill_orders(rows);
  EXPECT_FALSE(rows[0].observed_order.has_value());
  ASSERT_TRUE(rows[1].observed_order.has_value());
  EXPECT_NEAR(*rows[1].observed_order, 2.0, 1e-12);
  EXPECT_FALSE(rows[1].order_generalized);
}

TEST(Orders, GeneralizedRatioIsFlagged) {
  std::vector<ConvergenceRow> rows{row(0.3, 9e-2), row(0.1, 1e-2)};
  fill_orders(rows);
  ASSERT_TRUE(rows[1].observed_order.has_value());
  EXPECT_NEAR(*rows[1].observed_order, 2.0, 1e-12);
  EXPECT_TRUE(rows[1].order_generalized);
}

TEST(Orders, FailedNeighbourHasNoOrder) {
  std::vector<ConvergenceRow> rows{row(0.1, 1e-2), row(0.05, 2.5e-3), row(0.025, 6e-4)};
  rows[1].failure = "boom";
  fill_orders(rows);
  EXPECT_FALSE(rows[1].observed_order.has_value());
  EXPECT_FALSE(rows[2].observed_order.has_value());
}

TEST(Csv, LayoutAndRoundTrip) {
  ConvergenceReport rep;
  rep.problem = "heat1d-dd";
  rep.rows = {row(0.1, 1e-2), row(0.05, 2.5e-3)};
  fill_orders(rep.rows);
  const std::string text = format_csv(rep);
  std::istringstream in(text);
  std::vector<std::string> lines;
  for (std::string l; std::getline(in, l);) lines.push_back(l);
  ASSERT_EQ(lines.size(), 3u);
  EXPECT_EQ(lines[0], "k,error_max,observed_order,wall_seconds,krylov_iters");
  EXPECT_EQ(lines[1].find(",,"), lines[1].find(',', lines[1].find(',') + 1));  // empty order cell

  const auto back = parse_csv(text);
  ASSERT_EQ(back.size(), 2u);
  for (std::size_t i = 0; i < 2; ++i) {
    EXPECT_EQ(back[i].k, rep.rows[i].k);
    EXPECT_EQ(back[i].error_max, rep.rows[i].error_max);
    EXPECT_EQ(back[i].wall_seconds, rep.rows[i].wall_seconds);
    EXPECT_EQ(back[i].krylov_iters, rep.rows[i].krylov_iters);
    EXPECT_EQ(back[i].observed_order.has_value(), rep.rows[i].observed_order.has_value());
  }
  EXPECT_EQ(*back[1].observed_order, *rep.rows[1].observed_order);
}

TEST(Csv, FileRoundTripAndEmptyReport) {
  const auto dir = std::filesystem::temp_directory_path() / "eerk_harness_test";
  std::filesystem::create_directories(dir);
  const std::string path = (dir / "run.csv").string();
  std::filesystem::remove(path);

  ConvergenceReport empty;
  EXPECT_THROW(export_csv(empty, path), std::invalid_argument);
  EXPECT_FALSE(std::filesystem::exists(path));

  ConvergenceReport rep;
  rep.rows = {row(0.2, 3e-3)};
  rep.rows[0].failure = "diverged";
  export_csv(rep, path);
  const auto back = read_csv(path);
  ASSERT_EQ(back.size(), 1u);
  EXPECT_TRUE(std::isnan(back[0].error_max));
  EXPECT_FALSE(back[0].failure.empty());
  std::filesystem::remove_all(dir);
}

TEST(Csv, MalformedInputRejected) {
  EXPECT_THROW(parse_csv("k,error\n"), std::invalid_argument);
  EXPECT_THROW(parse_csv(std::string(kCsvHeader) + "\n0.1,1e-3,,0.5\n"), std::invalid_argument);
  EXPECT_THROW(parse_csv(std::string(kCsvHeader) + "\n0.1,1e-3x,,0.5,3\n"), std::invalid_argument);
}

TEST(Run, DeterministicErrors) {
  const RunConfig cfg = small_run();
  const ConvergenceReport a = run_convergence(cfg);
  const ConvergenceReport b = run_convergence(cfg);
  ASSERT_EQ(a.rows.size(), 2u);
  for (std::size_t i = 0; i < a.rows.size(); ++i) {
    EXPECT_TRUE(a.rows[i].failure.empty()) << a.rows[i].failure;
    EXPECT_EQ(a.rows[i].error_max, b.rows[i].error_max);
    EXPECT_EQ(a.rows[i].krylov_iters, b.rows[i].krylov_iters);
  }
  EXPECT_EQ(a.technique, "corrected-p2");
  EXPECT_EQ(a.method, "rk2");
}

TEST(Run, FailedRowIsRecordedAndRunContinues) {
  RunConfig cfg = small_run();
  cfg.ks = {0.3, 0.25};  // 0.3 does not divide the interval
  const ConvergenceReport rep = run_convergence(cfg);
  ASSERT_EQ(rep.rows.size(), 2u);
  EXPECT_FALSE(rep.rows[0].failure.empty());
  EXPECT_TRUE(std::isnan(rep.rows[0].error_max));
  EXPECT_TRUE(rep.rows[1].failure.empty());
  EXPECT_GT(rep.rows[1].error_max, 0.0);
  EXPECT_FALSE(rep.rows[1].observed_order.has_value());
}

TEST(Run, ConfigValidation) {
  RunConfig cfg = small_run();
  EXPECT_NO_THROW(cfg.validate());
  cfg.ks = {};
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  cfg.ks = {0.1, 0.1};
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  cfg.ks = {0.1, -0.05};
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  cfg = small_run();
  cfg.nx = 1;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  cfg = small_run();
  cfg.tol = 0.0;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  cfg = small_run();
  cfg.p = 4;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  cfg = small_run();
  cfg.method = "rk5";
  EXPECT_THROW(run_convergence(cfg), std::invalid_argument);
}

TEST(Efficiency, DuplicateReportGivesIdenticalColumns) {
  const ConvergenceReport rep = run_convergence(small_run());
  const EfficiencyTable t = efficiency_table({rep, rep});
  ASSERT_EQ(t.columns.size(), 2u);
  EXPECT_EQ(t.columns[0].key, "rk2/corrected-p2");
  EXPECT_EQ(t.columns[0].key, t.columns[1].key);
  EXPECT_EQ(t.columns[0].points, t.columns[1].points);
  EXPECT_EQ(t.columns[0].points.size(), 2u);
  EXPECT_EQ(t.problem, "heat1d-dd");
}

TEST(Efficiency, Rejections) {
  ConvergenceReport a;
  a.problem = "heat1d-dd";
  a.method = "rk2";
  a.rows = {row(0.1, 1e-3)};
  ConvergenceReport b = a;
  b.problem = "heat2d";
  EXPECT_THROW(efficiency_table({a}), std::invalid_argument);
  EXPECT_THROW(efficiency_table({a, b}), std::invalid_argument);
}

TEST(Efficiency, UnimplementedMethodIsAbsent) {
  ConvergenceReport a;
  a.problem = "heat1d-dd";
  a.method = "krogstad";
  a.technique = "corrected-p3";
  a.rows = {row(0.1, 1e-3)};
  ConvergenceReport b = a;
  b.method = "strehmel-weiner";
  const EfficiencyTable t = efficiency_table({a, b});
  ASSERT_NE(t.find("krogstad/corrected-p3"), nullptr);
  EXPECT_FALSE(t.find("krogstad/corrected-p3")->absent);
  const EfficiencyColumn* missing = t.find("strehmel-weiner/corrected-p3");
  ASSERT_NE(missing, nullptr);
  EXPECT_TRUE(missing->absent);
  EXPECT_TRUE(missing->points.empty());
  EXPECT_EQ(t.find("rk2/mol"), nullptr);
}

TEST(KList, FractionsAndDecimals) {
  const auto ks = parse_k_list("1/20,0.025,,1/80");
  ASSERT_EQ(ks.size(), 3u);
  EXPECT_DOUBLE_EQ(ks[0], 0.05);
  EXPECT_DOUBLE_EQ(ks[1], 0.025);
  EXPECT_DOUBLE_EQ(ks[2], 0.0125);
  EXPECT_THROW(parse_k_list(""), std::invalid_argument);
}

}  // namespace
