#include "marketlab/designs.hpp"

#include <cmath>

#include "marketlab/errors.hpp"

namespace marketlab {

namespace {

void require_interior(double a, const char* what) {
  if (!(a > 0.0 && a < 1.0)) {
    throw MarketError(ErrorKind::InvalidConfig, std::string(what) + " must lie in (0, 1)");
  }
}

}  // namespace

TsrFractions tsr_schedule(double balance, const TsrSchedule& sched) {
  if (!(balance > 0.0)) {
    throw MarketError(ErrorKind::NonPositiveParameter, "balance must be positive");
  }
  require_interior(sched.a_bar_c, "a_bar_c");
  require_interior(sched.a_bar_l, "a_bar_l");
  if (!(sched.c_exponent > 0.0)) {
    throw MarketError(ErrorKind::NonPositiveParameter, "schedule exponent must be positive");
  }
  const double e = std::exp(-sched.c_exponent * balance);
  return {(1.0 - e) + sched.a_bar_c * e, sched.a_bar_l * (1.0 - e) + e};
}

double beta_weight(double balance, double c_exponent) {
  if (!(balance > 0.0) || !(c_exponent > 0.0)) {
    throw MarketError(ErrorKind::NonPositiveParameter, "balance and exponent must be positive");
  }
  return std::exp(-c_exponent * balance);
}

void validate_cluster_scenario(const ClusterScenario& cs) {
  if (!(cs.x > 0.0 && std::isfinite(cs.x))) {
    throw MarketError(ErrorKind::NonPositiveParameter, "cluster x must be positive");
  }
  if (!(cs.y >= 0.0 && cs.y <= cs.x)) {
    throw MarketError(ErrorKind::InvalidConfig, "cluster y must lie in [0, x]");
  }
  if (!(cs.delta > 1.0 && std::isfinite(cs.delta))) {
    throw MarketError(ErrorKind::InvalidConfig, "cluster lift delta must exceed 1");
  }
}

ValidationOptions cluster_validation(const ClusterScenario& cs) {
  return ValidationOptions{.allow_zero_utility = cs.y == 0.0};
}

ClusterMarket cluster_market(const ClusterScenario& cs, std::size_t treated_cluster) {
  validate_cluster_scenario(cs);
  if (treated_cluster > 1) {
    throw MarketError(ErrorKind::InvalidConfig, "treated cluster must be 0 or 1");
  }
  MarketConfig cfg;
  cfg.lambda = cs.lambda;
  cfg.tau = cs.tau;
  cfg.customers = {
      {"cluster0", 0.5, cs.epsilon, {cs.alpha, cs.alpha}, {cs.x, cs.y}},
      {"cluster1", 0.5, cs.epsilon, {cs.alpha, cs.alpha}, {cs.y, cs.x}},
  };
  cfg.listings = {{"cluster0", 0.5, 1.0}, {"cluster1", 0.5, 1.0}};
  const ValidationOptions opts = cluster_validation(cs);
  cfg = validate_market(std::move(cfg), opts);

  ClusterMarket out{cfg, Intervention::multiplicative(cfg, cs.delta), {}};
  out.design.assignment = {treated_cluster == 0 ? 1 : 0, treated_cluster == 1 ? 1 : 0};
  return out;
}

}  // namespace marketlab
