#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "marketlab/designs.hpp"
#include "marketlab/errors.hpp"
#include "marketlab/estimators.hpp"

using namespace marketlab;
namespace oracle = marketlab::testing::oracle;

TEST(TsrSchedule, Endpoints) {
  const auto lo = tsr_schedule(1e-9);
  EXPECT_NEAR(lo.a_c, 0.5, 1e-8);
  EXPECT_NEAR(lo.a_l, 1.0, 1e-8);
  const auto hi = tsr_schedule(1e9);
  EXPECT_NEAR(hi.a_c, 1.0, 1e-8);
  EXPECT_NEAR(hi.a_l, 0.5, 1e-8);
}

TEST(TsrSchedule, UnitBalance) {
  const auto f = tsr_schedule(1.0);
  EXPECT_NEAR(f.a_c, oracle::kScheduleAc, 1e-15);
  EXPECT_NEAR(f.a_l, oracle::kScheduleAl, 1e-15);
}

TEST(TsrSchedule, MonotoneAndInterior) {
  double prev_c = 0.0, prev_l = 2.0;
  for (double b = 1e-3; b < 50.0; b *= 1.3) {
    const auto f = tsr_schedule(b, {0.3, 0.6, 2.0});
    EXPECT_GE(f.a_c, prev_c);
    EXPECT_LE(f.a_l, prev_l);
    EXPECT_GE(f.a_c, 0.3);
    EXPECT_GE(f.a_l, 0.6);
    prev_c = f.a_c;
    prev_l = f.a_l;
  }
}

TEST(TsrSchedule, RejectsBadInput) {
  EXPECT_THROW(tsr_schedule(0.0), MarketError);
  EXPECT_THROW(tsr_schedule(1.0, {1.0, 0.5, 1.0}), MarketError);
  EXPECT_THROW(tsr_schedule(1.0, {0.5, 0.5, 0.0}), MarketError);
}

TEST(BetaWeight, Values) {
  EXPECT_NEAR(beta_weight(1.0), oracle::kBeta1, 1e-15);
  EXPECT_NEAR(beta_weight(1e-12), 1.0, 1e-11);
  EXPECT_LT(beta_weight(1e3), 1e-300);
  EXPECT_NEAR(beta_weight(1.0, 2.0), oracle::kBeta1 * oracle::kBeta1, 1e-15);
}

TEST(BetaWeight, TsriReducesAtTheEnds) {
  // TSRI with the schedule and beta collapses to CR near 0 and LR near infinity.
  // Cell rates scale with the cell masses, as they do in a market.
  auto ledger = [](const TsrFractions& f) {
    return BookingLedger::from_rates(0.11 * (1 - f.a_c) * (1 - f.a_l), 0.13 * (1 - f.a_c) * f.a_l,
                                     0.07 * f.a_c * (1 - f.a_l), 0.17 * f.a_c * f.a_l);
  };
  for (double k : {1.0, 2.0}) {
    const auto lo = tsr_schedule(1e-9);
    const auto Llo = ledger(lo);
    const double tsri_lo = est_tsri(Llo, lo.a_c, lo.a_l, beta_weight(1e-9), k);
    const double cr_form =
        Llo.q(1, 1) / (lo.a_c * lo.a_l) - Llo.q(0, 1) / ((1 - lo.a_c) * lo.a_l);
    EXPECT_NEAR(tsri_lo, cr_form, 1e-8);
    const auto hi = tsr_schedule(1e9);
    const auto Lhi = ledger(hi);
    const double tsri_hi = est_tsri(Lhi, hi.a_c, hi.a_l, beta_weight(1e9), k);
    const double lr_form =
        Lhi.q(1, 1) / (hi.a_c * hi.a_l) - Lhi.q(1, 0) / (hi.a_c * (1 - hi.a_l));
    EXPECT_NEAR(tsri_hi, lr_form, 1e-8);
  }
}

TEST(ClusterMarket, Structure) {
  const ClusterMarket cm = cluster_market({0.5, 0.25, 1.3});
  ASSERT_EQ(cm.config.customers.size(), 2u);
  ASSERT_EQ(cm.config.listings.size(), 2u);
  EXPECT_DOUBLE_EQ(cm.config.customers[0].phi, 0.5);
  EXPECT_DOUBLE_EQ(cm.config.listings[1].rho, 0.5);
  EXPECT_DOUBLE_EQ(cm.config.customers[0].v[0], 0.5);
  EXPECT_DOUBLE_EQ(cm.config.customers[0].v[1], 0.25);
  EXPECT_DOUBLE_EQ(cm.config.customers[1].v[0], 0.25);
  EXPECT_NEAR(cm.intervention.v_treated(0, 0), 0.65, 1e-15);
  EXPECT_NEAR(cm.intervention.v_treated(0, 1), 0.325, 1e-15);
  EXPECT_NEAR(cm.intervention.v_treated(1, 0), 0.325, 1e-15);
  EXPECT_NEAR(cm.intervention.v_treated(1, 1), 0.65, 1e-15);
  EXPECT_EQ(cm.design.assignment, (std::vector<int>{1, 0}));
  EXPECT_EQ(cluster_market({0.5, 0.25, 1.3}, 1).design.assignment, (std::vector<int>{0, 1}));
}

TEST(ClusterMarket, SeparableAllowsZeroUtility) {
  EXPECT_NO_THROW(cluster_market({0.5, 0.0, 1.3}));
  EXPECT_TRUE(cluster_validation({0.5, 0.0, 1.3}).allow_zero_utility);
  EXPECT_FALSE(cluster_validation({0.5, 0.1, 1.3}).allow_zero_utility);
}

TEST(ClusterMarket, RejectsBadScenarios) {
  EXPECT_THROW(cluster_market({0.5, 0.6, 1.3}), MarketError);
  EXPECT_THROW(cluster_market({0.5, 0.2, 1.0}), MarketError);
  EXPECT_THROW(cluster_market({0.0, 0.0, 1.3}), MarketError);
  EXPECT_THROW(cluster_market({0.5, 0.2, 1.3}, 2), MarketError);
}

TEST(ClusterMarket, FullyMixedMatchesListingSide) {
  // y = x makes listing types exchangeable
  ClusterScenario cs{0.5, 0.5, 1.3};
  const Experiment e = cluster_experiment(cs);
  const auto report = mean_field_estimates(e, {EstimatorId::cluster(), EstimatorId::lr()});
  EXPECT_NEAR(report.estimates.at(EstimatorId::cluster()), report.estimates.at(EstimatorId::lr()),
              1e-10);
}
