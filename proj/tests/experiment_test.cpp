#include <cmath>

#include <gtest/gtest.h>

#include "burstnorm/experiment.hpp"

using namespace burstnorm;

namespace {

Mode scalar_mode(double a, double c = 1.0) {
  return {Matrix::Constant(1, 1, a), Matrix::Ones(1, 1), Matrix::Constant(1, 1, c),
          Matrix::Zero(1, 1)};
}

// The lost mode decays slower, so more loss means a larger norm.
ModeSet toy_channel() {
  return {{scalar_mode(0.8, 1.0), scalar_mode(0.3, 1.0)}, {kLostLabel, kReceivedLabel}};
}

SweepConfig fast_config(std::vector<double> plrs) {
  SweepConfig cfg;
  cfg.plr_values = std::move(plrs);
  cfg.p_step_coarse = 0.05;
  cfg.p_step_fine = 0.005;
  cfg.rel_tol = 1e-5;
  return cfg;
}

}  // namespace

TEST(SweepConfig, Validation) {
  SweepConfig cfg;
  EXPECT_NO_THROW(cfg.validate());
  cfg.plr_values = {1.0};
  EXPECT_THROW(cfg.validate(), Error);
  cfg = {};
  cfg.p_step_fine = 0.1;
  EXPECT_THROW(cfg.validate(), Error);
  cfg = {};
  cfg.rel_tol = 0.1;
  EXPECT_THROW(cfg.validate(), Error);
}

TEST(WorstCase, RefinementNeverLowersCoarseMaximum) {
  const auto sweep = worst_case_over_region(toy_channel(), 0.3, fast_config({0.3}));
  ASSERT_TRUE(sweep.row.ok) << sweep.row.error;
  double coarse = 0.0;
  for (const auto& point : sweep.curve) {
    if (point.ok) coarse = std::max(coarse, point.norm);
  }
  EXPECT_GE(sweep.row.gil_norm, coarse);
  EXPECT_FALSE(sweep.refinement.empty());
  EXPECT_NEAR(sweep.row.argmax_q / (sweep.row.argmax_p + sweep.row.argmax_q), 0.3, 1e-12);
}

TEST(WorstCase, BernoulliPointBelongsToCurve) {
  const auto sweep = worst_case_over_region(toy_channel(), 0.4, fast_config({0.4}));
  ASSERT_TRUE(sweep.row.ok);
  bool found = false;
  for (const auto& point : sweep.curve) {
    if (std::abs(point.p - 0.6) < 1e-12) {
      found = true;
      EXPECT_EQ(point.norm, sweep.row.ber_norm);
    }
  }
  EXPECT_TRUE(found);
  EXPECT_GE(sweep.row.err, -1e-5);
}

TEST(WorstCase, FlatSweepUsesFineStep) {
  SweepConfig cfg = fast_config({0.5});
  cfg.flat = true;
  cfg.p_step_fine = 0.05;
  const auto sweep = worst_case_over_region(toy_channel(), 0.5, cfg);
  EXPECT_TRUE(sweep.refinement.empty());
  EXPECT_EQ(sweep.curve.size(), 19u);
}

TEST(WorstCase, UnstableModelIsFlaggedNotFatal) {
  const ModeSet unstable{{scalar_mode(1.5), scalar_mode(1.2)}, {}};
  const auto sweep = worst_case_over_region(unstable, 0.5, fast_config({0.5}));
  EXPECT_FALSE(sweep.row.ok);
  EXPECT_EQ(sweep.row.flagged_points, sweep.curve.size());
  EXPECT_NE(sweep.row.error.find("not mean-square stable"), std::string::npos);
}

TEST(ReproduceTable, DeterministicAndDominant) {
  const SweepConfig cfg = fast_config({0.2, 0.5, 0.8});
  const auto a = reproduce_table(toy_channel(), cfg);
  const auto b = reproduce_table(toy_channel(), cfg);
  ASSERT_EQ(a.size(), 3u);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].gil_norm, b[i].gil_norm);
    EXPECT_EQ(a[i].ber_norm, b[i].ber_norm);
    EXPECT_GE(a[i].gil_norm, a[i].ber_norm * (1 - cfg.rel_tol));
  }
  EXPECT_LT(a[0].ber_norm, a[1].ber_norm);
  EXPECT_LT(a[1].ber_norm, a[2].ber_norm);
  const std::string csv = table_csv(a);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "plr,gil,ber,err,argmax_p,argmax_q");
}

TEST(Reference, PublishedRows) {
  const auto ref = reference_table();
  ASSERT_EQ(ref.size(), 9u);
  EXPECT_DOUBLE_EQ(ref[4].ber, 2.3264);
  EXPECT_DOUBLE_EQ(ref[7].gil, 3.1023);
  for (std::size_t i = 1; i < ref.size(); ++i) EXPECT_GT(ref[i].ber, ref[i - 1].ber);
}

TEST(Reference, SelfComparisonAndErrNote) {
  std::vector<ComparisonRow> rows;
  for (const auto& ref : reference_table()) {
    ComparisonRow row;
    row.plr = ref.plr;
    row.gil_norm = ref.gil;
    row.ber_norm = ref.ber;
    row.err = (ref.gil - ref.ber) / ref.ber;
    row.ok = true;
    rows.push_back(row);
  }
  const auto report = compare_with_reference(rows, "self");
  EXPECT_TRUE(report.within(1e-15));
  EXPECT_NE(report.text.find("printed ERR at PLR 0.1"), std::string::npos);

  rows[2].ok = false;
  rows[2].error = "not mean-square stable";
  const auto partial = compare_with_reference(rows, "partial");
  EXPECT_EQ(partial.compared_rows, 8u);
  EXPECT_FALSE(partial.within(1.0));
}

TEST(MonteCarlo, GainsStayBelowCertifiedNorm) {
  SweepConfig cfg = fast_config({0.2, 0.7});
  const auto report = monte_carlo_validate(toy_channel(), cfg, 20, 2000);
  ASSERT_EQ(report.entries.size(), 4u);
  EXPECT_TRUE(report.all_certified);
  EXPECT_EQ(report.violations, 0u);
  for (const auto& e : report.entries) {
    EXPECT_GT(e.min_margin, 0.0);
    EXPECT_NEAR(e.mean_burst, e.expected_burst, 0.1 * e.expected_burst) << e.chain << e.plr;
  }
  EXPECT_EQ(report.text(), monte_carlo_validate(toy_channel(), cfg, 20, 2000).text());
  EXPECT_THROW(monte_carlo_validate(toy_channel(), cfg, 5, 100), Error);
}

TEST(MonteCarlo, BurstyPairKeepsLossRate) {
  for (const double plr : default_plr_values()) {
    const auto g = bursty_pair(plr);
    EXPECT_NEAR(plr_of(g), plr, 1e-15);
    EXPECT_NEAR(1.0 / g.p(), 2.0 / (1.0 - plr), 1e-12);
  }
}

TEST(RegionFigure, AllNineRegions) {
  SweepConfig cfg;
  cfg.p_step_coarse = 0.1;
  cfg.p_step_fine = 0.1;
  const std::string csv = region_figure_data(cfg);
  EXPECT_EQ(csv.substr(0, 8), "plr,p,q\n");
  EXPECT_NE(csv.find("\n0.90000000000000002,"), std::string::npos);
}
