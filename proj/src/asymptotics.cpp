#include "marketlab/asymptotics.hpp"

#include <iostream>

#include "marketlab/errors.hpp"

namespace marketlab {

namespace {

void require_positive(double x, const char* what) {
  if (!(x > 0.0) || !std::isfinite(x)) {
    throw MarketError(ErrorKind::NonPositiveParameter, std::string(what) + " must be positive");
  }
}

void require_fraction(double a, const char* what) {
  if (!(a >= 0.0 && a <= 1.0)) {
    throw MarketError(ErrorKind::InvalidConfig, std::string(what) + " must lie in [0, 1]");
  }
}

std::array<double, 4> demand_rates(const ExpandedMarket& m) {
  std::array<double, 4> q{};
  for (std::size_t k = 0; k < m.num_customer_cells(); ++k) {
    const double phi = m.phi(static_cast<Eigen::Index>(k));
    if (phi <= 0.0) continue;
    const auto p = choice_probabilities(k, m.rho, m);
    const std::size_t i = k % 2;
    for (std::size_t c = 0; c < m.num_listing_cells(); ++c) {
      q[2 * i + c % 2] += phi * p.listing(static_cast<Eigen::Index>(c));
    }
  }
  return q;
}

std::array<double, 4> supply_rates(const ExpandedMarket& m) {
  const Eigen::MatrixXd g = g_factor(m);
  std::array<double, 4> q{};
  for (std::size_t c = 0; c < m.num_listing_cells(); ++c) {
    const auto ci = static_cast<Eigen::Index>(c);
    const double supply = m.rho(ci) * m.nu(ci);
    if (supply <= 0.0) continue;
    const Eigen::VectorXd pull = m.phi.cwiseProduct(g.col(ci));
    const double total = pull.sum();
    if (total <= 0.0) continue;
    for (std::size_t k = 0; k < m.num_customer_cells(); ++k) {
      q[2 * (k % 2) + c % 2] += pull(static_cast<Eigen::Index>(k)) / total * supply;
    }
  }
  return q;
}

}  // namespace

std::string_view to_string(Regime r) {
  return r == Regime::DemandLimit ? "demand" : "supply";
}

Eigen::MatrixXd g_factor(const ExpandedMarket& m) {
  return m.epsilon.cwiseInverse().asDiagonal() * m.weights();
}

LimitTable q_limit_demand(const ExpandedMarket& m) {
  LimitTable t{Regime::DemandLimit, demand_rates(m), 0.0};
  t.gte_over_scale = demand_rates(m.with_fractions(1.0, 1.0))[3] -
                     demand_rates(m.with_fractions(0.0, 0.0))[0];
  return t;
}

LimitTable q_limit_supply(const ExpandedMarket& m) {
  LimitTable t{Regime::SupplyLimit, supply_rates(m), 0.0};
  t.gte_over_scale = supply_rates(m.with_fractions(1.0, 1.0))[3] -
                     supply_rates(m.with_fractions(0.0, 0.0))[0];
  return t;
}

LimitTable homogeneous_limits(double v, double v_treated, double epsilon, double rho, double a_c,
                              double a_l, Regime regime) {
  require_positive(v, "v");
  require_positive(v_treated, "treated v");
  require_positive(epsilon, "epsilon");
  require_positive(rho, "rho");
  require_fraction(a_c, "a_C");
  require_fraction(a_l, "a_L");

  LimitTable t;
  t.regime = regime;
  auto& q = t.q_over_scale;
  if (regime == Regime::DemandLimit) {
    const double treated_denominator = epsilon + (1.0 - a_l) * rho * v + a_l * rho * v_treated;
    const double control_denominator = epsilon + rho * v;
    q[3] = a_c * a_l * rho * v_treated / treated_denominator;
    q[2] = a_c * (1.0 - a_l) * rho * v / treated_denominator;
    q[1] = (1.0 - a_c) * a_l * rho * v / control_denominator;
    q[0] = (1.0 - a_c) * (1.0 - a_l) * rho * v / control_denominator;
    t.gte_over_scale = rho * v_treated / (epsilon + rho * v_treated) - rho * v / control_denominator;
  } else {
    const double pull = a_c * v_treated + (1.0 - a_c) * v;
    q[3] = a_l * rho * a_c * v_treated / pull;
    q[1] = a_l * rho * (1.0 - a_c) * v / pull;
    q[2] = (1.0 - a_l) * rho * a_c;
    q[0] = (1.0 - a_l) * rho * (1.0 - a_c);
    t.gte_over_scale = 0.0;
  }
  return t;
}

TwoListingForms two_listing_forms(double v, double v_treated, double epsilon, double lambda,
                                  double tau, double a_c) {
  require_positive(v, "v");
  require_positive(v_treated, "treated v");
  require_positive(epsilon, "epsilon");
  require_positive(lambda, "lambda");
  require_positive(tau, "tau");
  if (!(a_c > 0.0 && a_c < 1.0)) {
    throw MarketError(ErrorKind::DegenerateArm, "a_C must lie in (0, 1)");
  }
  const double vt = v_treated;
  TwoListingForms f;
  const double treated_book = a_c * vt / (epsilon + vt);
  f.zeta = treated_book + (1.0 - a_c) * v / (epsilon + v);
  f.eta = treated_book / f.zeta;
  f.gte = 2.0 * (1.0 / ((epsilon + vt) / (lambda * vt) + 1.0 / tau) -
                 1.0 / ((epsilon + v) / (lambda * v) + 1.0 / tau));
  f.cr_estimate =
      (2.0 / a_c) / ((epsilon + vt) / (a_c * lambda * vt) + 1.0 / (f.eta * tau)) -
      (2.0 / (1.0 - a_c)) /
          ((epsilon + v) / ((1.0 - a_c) * lambda * v) + 1.0 / ((1.0 - f.eta) * tau));
  f.lr_estimate = f.gte;
  return f;
}

StateVector supply_state_approx(const ExpandedMarket& m, double balance) {
  require_positive(balance, "balance");
  if (balance < 100.0) {
    std::clog << "warning: supply-limit state approximation used at balance " << balance
              << " (< 100)\n";
  }
  const Eigen::MatrixXd g = g_factor(m);
  StateVector s = m.rho;
  for (Eigen::Index c = 0; c < s.size(); ++c) {
    const double pull = m.phi.dot(g.col(c));
    if (m.rho(c) > 0.0 && pull > 0.0) s(c) = m.rho(c) * m.nu(c) / (balance * pull);
  }
  return s;
}

}  // namespace marketlab
