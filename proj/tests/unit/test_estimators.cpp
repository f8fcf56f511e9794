#include <gtest/gtest.h>

#include <random>

#include "fixtures.hpp"
#include "marketlab/asymptotics.hpp"
#include "marketlab/errors.hpp"
#include "marketlab/estimators.hpp"

using namespace marketlab;
namespace oracle = marketlab::testing::oracle;

namespace {

BookingLedger random_ledger(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.01, 1.0);
  return BookingLedger::from_rates(u(rng), u(rng), u(rng), u(rng));
}

GteReport calib_report(double lambda, const std::vector<EstimatorId>& ids) {
  return mean_field_estimates(marketlab::testing::calibration(lambda), ids);
}

}  // namespace

TEST(Formulas, NaiveEstimators) {
  const auto L = BookingLedger::from_rates(0.1, 0.2, 0.3, 0.4);
  EXPECT_DOUBLE_EQ(est_cr(L, 0.25), 0.4 / 0.25 - 0.2 / 0.75);
  EXPECT_DOUBLE_EQ(est_lr(L, 0.4), 0.4 / 0.4 - 0.3 / 0.6);
  EXPECT_DOUBLE_EQ(est_tsrn(L, 0.5, 0.5), 0.4 / 0.25 - 0.6 / 0.75);
  EXPECT_DOUBLE_EQ(est_cluster(L, 0.5), 0.4 / 0.5 - 0.3 / 0.5);
}

TEST(Formulas, TsriMatchesDefinition) {
  const auto L = BookingLedger::from_rates(0.1, 0.2, 0.3, 0.4);
  const double ac = 0.6, al = 0.7, b = 0.3, k = 2.0;
  const double h11 = 0.4 / (ac * al), h01 = 0.2 / ((1 - ac) * al);
  const double h10 = 0.3 / (ac * (1 - al)), h00 = 0.1 / ((1 - ac) * (1 - al));
  const double expected = b * (h11 - h01 - k * (1 - b) * (h00 - h01)) +
                          (1 - b) * (h11 - h10 - k * b * (h00 - h10));
  EXPECT_NEAR(est_tsri(L, ac, al, b, k), expected, 1e-14);
}

TEST(Reductions, HoldOnArbitraryLedgers) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> a(0.05, 0.95);
  for (int i = 0; i < 200; ++i) {
    auto L = random_ledger(rng);
    const double ac = a(rng), al = a(rng);
    // a_L = 1: the design has no control listings
    auto Lc = L;
    Lc.q(0, 0) = Lc.q(1, 0) = 0.0;
    EXPECT_NEAR(est_tsrn(Lc, ac, 1.0), est_cr(Lc, ac), 1e-12);
    auto Ll = L;
    Ll.q(0, 0) = Ll.q(0, 1) = 0.0;
    EXPECT_NEAR(est_tsrn(Ll, 1.0, al), est_lr(Ll, al), 1e-12);
    const double cr_form = L.q(1, 1) / (ac * al) - L.q(0, 1) / ((1 - ac) * al);
    EXPECT_NEAR(est_tsri(L, ac, al, 1.0, 7.0), cr_form, 1e-12);
    const double lr_form = L.q(1, 1) / (ac * al) - L.q(1, 0) / (ac * (1 - al));
    EXPECT_NEAR(est_tsri(L, ac, al, 0.0, 7.0), lr_form, 1e-12);
  }
}

TEST(ScaleEquivariance, AllEstimators) {
  std::mt19937_64 rng(4);
  for (int i = 0; i < 50; ++i) {
    const auto L = random_ledger(rng);
    auto L3 = L;
    for (auto& q : L3.rates) q *= 3.0;
    EXPECT_NEAR(est_cr(L3, 0.3), 3.0 * est_cr(L, 0.3), 1e-12);
    EXPECT_NEAR(est_lr(L3, 0.3), 3.0 * est_lr(L, 0.3), 1e-12);
    EXPECT_NEAR(est_tsrn(L3, 0.3, 0.6), 3.0 * est_tsrn(L, 0.3, 0.6), 1e-12);
    EXPECT_NEAR(est_tsri(L3, 0.3, 0.6, 0.4, 2.0), 3.0 * est_tsri(L, 0.3, 0.6, 0.4, 2.0), 1e-11);
    EXPECT_NEAR(est_cluster(L3, 0.5), 3.0 * est_cluster(L, 0.5), 1e-12);
  }
}

TEST(Errors, DegenerateArms) {
  const auto L = BookingLedger::from_rates(0.1, 0.2, 0.3, 0.4);
  for (double a : {0.0, 1.0}) {
    EXPECT_THROW(est_cr(L, a), MarketError);
    EXPECT_THROW(est_lr(L, a), MarketError);
    EXPECT_THROW(est_cluster(L, a), MarketError);
  }
  EXPECT_THROW(est_tsrn(L, 1.0, 1.0), MarketError);
  EXPECT_THROW(est_tsri(L, 1.0, 0.5, 0.5, 1.0), MarketError);
  EXPECT_THROW(est_tsri(L, 0.5, 0.5, 1.5, 1.0), MarketError);
  EXPECT_THROW(est_tsri(L, 0.5, 0.5, 0.5, 0.0), MarketError);
  try {
    est_cr(L, 1.0);
  } catch (const MarketError& e) {
    EXPECT_EQ(e.kind(), ErrorKind::DegenerateArm);
  }
}

TEST(Names, RoundTrip) {
  for (const auto& id : {EstimatorId::cr(), EstimatorId::lr(), EstimatorId::tsrn(),
                         EstimatorId::tsri(1.0), EstimatorId::tsri(2.0), EstimatorId::tsri(0.5),
                         EstimatorId::cluster()}) {
    EXPECT_EQ(parse_estimator(id.name()), id) << id.name();
  }
  EXPECT_FALSE(parse_estimator("tsri-0").has_value());
  EXPECT_FALSE(parse_estimator("tsri-x").has_value());
  EXPECT_FALSE(parse_estimator("naive").has_value());
}

TEST(GteTrue, Calibration) {
  const auto e = marketlab::testing::calibration();
  EXPECT_NEAR(gte_true(e.config, e.intervention), oracle::kGte, 1e-12);
  EXPECT_NEAR(gte_true(e.config, Intervention::null(e.config)), 0.0, 1e-12);
}

TEST(GteTrue, DemandProxy) {
  const auto e = marketlab::testing::calibration(1e-4);
  EXPECT_NEAR(gte_true(e.config, e.intervention) / 1e-4, oracle::kDemandGte, 1e-4);
}

TEST(MeanField, NullInterventionEstimatesVanish) {
  auto e = marketlab::testing::calibration();
  e.intervention = Intervention::null(e.config);
  const auto r = mean_field_estimates(e, {EstimatorId::cr(), EstimatorId::lr(), EstimatorId::tsrn(),
                                          EstimatorId::tsri(1.0), EstimatorId::tsri(2.5)});
  for (const auto& [id, v] : r.estimates) EXPECT_NEAR(v, 0.0, 1e-10) << id.name();
  for (const auto& [id, b] : r.bias) EXPECT_DOUBLE_EQ(b, r.estimates.at(id) - r.gte_true);
}

TEST(MeanField, DemandProxy) {
  const double lambda = 1e-4;
  const auto r = calib_report(lambda, {EstimatorId::cr(), EstimatorId::lr()});
  EXPECT_NEAR(r.estimates.at(EstimatorId::cr()) / lambda, oracle::kDemandGte, 1e-3);
  EXPECT_NEAR(r.estimates.at(EstimatorId::lr()) / lambda, oracle::kDemandLr, 1e-3);
}

TEST(MeanField, SupplyProxy) {
  const auto r = calib_report(1e4, {EstimatorId::cr(), EstimatorId::lr()});
  EXPECT_NEAR(r.estimates.at(EstimatorId::cr()), oracle::kSupplyCr, 2e-3);
  EXPECT_NEAR(r.estimates.at(EstimatorId::lr()), 0.0, 2e-3);
}

TEST(MeanField, TsrnUnbiasedAtBothEnds) {
  for (double lambda : {1e-4, 1e4}) {
    const auto r = calib_report(lambda, {EstimatorId::tsrn(), EstimatorId::cr(), EstimatorId::lr()});
    const double scale = std::max(std::abs(r.gte_true), 1e-3 * lambda);
    EXPECT_LE(std::abs(r.bias.at(EstimatorId::tsrn())) / scale, 1e-2) << lambda;
    if (lambda < 1.0) {
      EXPECT_LE(std::abs(r.bias.at(EstimatorId::cr())) / scale, 1e-2);
      EXPECT_GT(std::abs(r.bias.at(EstimatorId::lr())) / scale, 1e-2);
    } else {
      EXPECT_LE(std::abs(r.bias.at(EstimatorId::lr())) / scale, 1e-2);
      EXPECT_GT(std::abs(r.bias.at(EstimatorId::cr())) / scale, 1e-2);
    }
  }
}

TEST(MeanField, SeparableClusterIsUnbiased) {
  const Experiment e = cluster_experiment({0.5, 0.0, 1.3});
  const auto r = mean_field_estimates(e, {EstimatorId::cluster()});
  EXPECT_NEAR(r.gte_true, oracle::kClusterSeparableGte, 1e-10);
  EXPECT_NEAR(r.estimates.at(EstimatorId::cluster()), r.gte_true, 1e-8);
}

TEST(DesignFor, Families) {
  EstimatorSettings s;
  s.a_c = 0.3;
  EXPECT_EQ(describe(design_for(EstimatorId::cr(), 1.0, s)), "CR(0.3)");
  EXPECT_EQ(describe(design_for(EstimatorId::lr(), 1.0, s)), "LR(0.5)");
  EXPECT_TRUE(std::holds_alternative<design::TwoSided>(design_for(EstimatorId::tsri(2.0), 1.0, s)));
  EXPECT_THROW(design_for(EstimatorId::cluster(), 1.0, s), MarketError);
}
