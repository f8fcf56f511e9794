#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "marketlab/errors.hpp"
#include "marketlab/market_model.hpp"

using namespace marketlab;
namespace oracle = marketlab::testing::oracle;

namespace {

ErrorKind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const MarketError& e) {
    return e.kind();
  }
  ADD_FAILURE() << "expected a MarketError";
  return ErrorKind::InvalidConfig;
}

MarketConfig two_by_two() {
  MarketConfig cfg;
  cfg.customers = {{"a", 0.4, 1.0, {1.0, 0.5}, {0.3, 0.6}}, {"b", 0.6, 2.0, {0.8, 1.0}, {0.2, 0.4}}};
  cfg.listings = {{"x", 0.3, 1.0}, {"y", 0.7, 2.0}};
  return validate_market(cfg);
}

}  // namespace

TEST(ValidateMarket, RejectsNonPositiveRates) {
  MarketConfig cfg = two_by_two();
  cfg.lambda = 0.0;
  EXPECT_EQ(kind_of([&] { validate_market(cfg); }), ErrorKind::NonPositiveParameter);
  cfg = two_by_two();
  cfg.listings[0].nu = -1.0;
  EXPECT_EQ(kind_of([&] { validate_market(cfg); }), ErrorKind::NonPositiveParameter);
}

TEST(ValidateMarket, ShareSums) {
  MarketConfig cfg = two_by_two();
  cfg.customers[0].phi = 0.3;
  EXPECT_EQ(kind_of([&] { validate_market(cfg); }), ErrorKind::ShareSumMismatch);
  cfg = two_by_two();
  cfg.listings[1].rho += 5e-10;
  const MarketConfig ok = validate_market(cfg);
  EXPECT_NEAR(ok.listings[0].rho + ok.listings[1].rho, 1.0, 1e-15);
}

TEST(ValidateMarket, ConsiderationAndUtilityRanges) {
  MarketConfig cfg = two_by_two();
  cfg.customers[0].alpha[1] = 0.0;
  EXPECT_EQ(kind_of([&] { validate_market(cfg); }), ErrorKind::NonPositiveParameter);
  cfg = two_by_two();
  cfg.customers[0].v[1] = 0.0;
  EXPECT_EQ(kind_of([&] { validate_market(cfg); }), ErrorKind::NonPositiveParameter);
  EXPECT_NO_THROW(validate_market(cfg, ValidationOptions{.allow_zero_utility = true}));
  cfg = two_by_two();
  cfg.customers[0].v.pop_back();
  EXPECT_EQ(kind_of([&] { validate_market(cfg); }), ErrorKind::InvalidConfig);
}

TEST(ValidateDesign, FractionRanges) {
  const MarketConfig cfg = two_by_two();
  EXPECT_EQ(kind_of([&] { validate_design(cfg, design::CustomerSide{1.0}); }), ErrorKind::InvalidConfig);
  EXPECT_EQ(kind_of([&] { validate_design(cfg, design::ListingSide{0.0}); }), ErrorKind::InvalidConfig);
  EXPECT_NO_THROW(validate_design(cfg, design::TwoSided{1.0, 0.5}));
  EXPECT_EQ(kind_of([&] { validate_design(cfg, design::Cluster{{1}}); }), ErrorKind::InvalidConfig);
  EXPECT_EQ(kind_of([&] { validate_design(cfg, design::Cluster{{1, 2}}); }), ErrorKind::InvalidConfig);
}

TEST(Expand, TwoSidedMasses) {
  const MarketConfig cfg = two_by_two();
  const auto itv = Intervention::multiplicative(cfg, 1.5);
  const ExpandedMarket m = expand_for_design(cfg, itv, design::TwoSided{0.3, 0.6});
  ASSERT_EQ(m.phi.size(), 4);
  EXPECT_NEAR(m.phi(0), 0.4 * 0.7, 1e-15);
  EXPECT_NEAR(m.phi(1), 0.4 * 0.3, 1e-15);
  EXPECT_NEAR(m.rho(2), 0.7 * 0.4, 1e-15);
  EXPECT_NEAR(m.rho(3), 0.7 * 0.6, 1e-15);
  EXPECT_DOUBLE_EQ(m.a_c, 0.3);
  EXPECT_DOUBLE_EQ(m.a_l, 0.6);
  // only treated customer x treated listing carries the lift
  EXPECT_DOUBLE_EQ(m.v(1, 1), 0.3 * 1.5);
  EXPECT_DOUBLE_EQ(m.v(1, 0), 0.3);
  EXPECT_DOUBLE_EQ(m.v(0, 1), 0.3);
  EXPECT_DOUBLE_EQ(m.v(3, 3), 0.4 * 1.5);
  EXPECT_DOUBLE_EQ(m.epsilon(3), 2.0);
  EXPECT_DOUBLE_EQ(m.nu(3), 2.0);
}

TEST(Expand, DegenerateDesignsKeepZeroCells) {
  const MarketConfig cfg = two_by_two();
  const auto itv = Intervention::multiplicative(cfg, 1.5);
  const ExpandedMarket gc = expand_for_design(cfg, itv, design::GlobalControl{});
  EXPECT_EQ(gc.rho.size(), 4);
  EXPECT_EQ(gc.rho(1), 0.0);
  EXPECT_EQ(gc.phi(1), 0.0);
  const ExpandedMarket gt = expand_for_design(cfg, itv, design::GlobalTreatment{});
  EXPECT_EQ(gt.rho(0), 0.0);
  EXPECT_NEAR(gt.rho(1), 0.3, 1e-15);
  const ExpandedMarket cr = expand_for_design(cfg, itv, design::CustomerSide{0.25});
  EXPECT_EQ(cr.rho(0), 0.0);
  EXPECT_NEAR(cr.phi(1), 0.1, 1e-15);
}

TEST(Expand, ClusterAssignment) {
  const MarketConfig cfg = two_by_two();
  const auto itv = Intervention::multiplicative(cfg, 1.5);
  const ExpandedMarket m = expand_for_design(cfg, itv, design::Cluster{{0, 1}});
  EXPECT_EQ(m.rho(1), 0.0);
  EXPECT_NEAR(m.rho(0), 0.3, 1e-15);
  EXPECT_EQ(m.rho(2), 0.0);
  EXPECT_NEAR(m.rho(3), 0.7, 1e-15);
  EXPECT_NEAR(m.a_l, 0.7, 1e-15);
  EXPECT_EQ(m.phi(0), 0.0);
}

TEST(Expand, WithFractionsAndControlOnly) {
  const MarketConfig cfg = two_by_two();
  const auto itv = Intervention::multiplicative(cfg, 1.5);
  const ExpandedMarket cr = expand_for_design(cfg, itv, design::CustomerSide{0.5});
  const ExpandedMarket gt = cr.with_fractions(1.0, 1.0);
  const ExpandedMarket ref = expand_for_design(cfg, itv, design::GlobalTreatment{});
  EXPECT_TRUE(gt.phi.isApprox(ref.phi));
  EXPECT_TRUE(gt.rho.isApprox(ref.rho));
  const ExpandedMarket ctrl = cr.control_only();
  EXPECT_DOUBLE_EQ(ctrl.v(1, 1), ctrl.v(0, 1));
}

TEST(ChoiceProbabilities, CalibrationAtFullAvailability) {
  const auto e = marketlab::testing::calibration();
  const ExpandedMarket m = expand_for_design(e.config, e.intervention, design::TwoSided{1.0, 0.5});
  const Eigen::VectorXd full = m.rho;
  const auto p = choice_probabilities(1, full, m);
  EXPECT_NEAR(p.listing.sum() + p.outside, 1.0, 1e-15);
  const ExpandedMarket gc = expand_for_design(e.config, e.intervention, design::GlobalControl{});
  EXPECT_NEAR(choice_probabilities(0, gc.rho, gc).listing.sum(), oracle::kChoiceV, 1e-14);
  const ExpandedMarket gt = expand_for_design(e.config, e.intervention, design::GlobalTreatment{});
  EXPECT_NEAR(choice_probabilities(1, gt.rho, gt).listing.sum(), oracle::kChoiceVt, 1e-14);
}

TEST(ChoiceProbabilities, ZeroMassCellsGetNothing) {
  const auto e = marketlab::testing::calibration();
  const ExpandedMarket gc = expand_for_design(e.config, e.intervention, design::GlobalControl{});
  const auto p = choice_probabilities(0, gc.rho, gc);
  EXPECT_EQ(p.listing(1), 0.0);
}

TEST(StateBounds, Slack) {
  const auto e = marketlab::testing::calibration();
  const ExpandedMarket gc = expand_for_design(e.config, e.intervention, design::GlobalControl{});
  Eigen::VectorXd s = gc.rho;
  s(0) += 5e-10;
  EXPECT_NO_THROW(check_state_bounds(s, gc));
  s(0) += 1e-8;
  EXPECT_EQ(kind_of([&] { check_state_bounds(s, gc); }), ErrorKind::StateOutOfBounds);
  s = gc.rho;
  s(0) = -1e-6;
  EXPECT_EQ(kind_of([&] { check_state_bounds(s, gc); }), ErrorKind::StateOutOfBounds);
}

TEST(ClassifyIntervention, Signs) {
  const MarketConfig cfg = two_by_two();
  EXPECT_EQ(classify_intervention(cfg, Intervention::multiplicative(cfg, 1.2)), InterventionClass::Positive);
  EXPECT_EQ(classify_intervention(cfg, Intervention::multiplicative(cfg, 0.8)), InterventionClass::Negative);
  EXPECT_EQ(classify_intervention(cfg, Intervention::null(cfg)), InterventionClass::Indeterminate);
  Intervention mixed = Intervention::multiplicative(cfg, 1.2);
  mixed.v_treated(0, 0) = 0.1;
  EXPECT_EQ(classify_intervention(cfg, mixed), InterventionClass::Indeterminate);
}

TEST(Describe, Designs) {
  EXPECT_EQ(describe(design::GlobalControl{}), "GC");
  EXPECT_EQ(describe(design::TwoSided{0.5, 0.25}), "TSR(0.5,0.25)");
  EXPECT_EQ(describe(design::Cluster{{1, 0}}), "Cluster(1,0)");
}
