#pragma once

#include <array>

#include "marketlab/market_model.hpp"

namespace marketlab {

enum class Regime { DemandLimit, SupplyLimit };

std::string_view to_string(Regime r);

/// Limiting booking rates. Entries are Q_ij / lambda in the demand limit and
/// Q_ij / tau in the supply limit, indexed 2*i + j.
struct LimitTable {
  Regime regime = Regime::DemandLimit;
  std::array<double, 4> q_over_scale{};
  double gte_over_scale = 0.0;

  double q(int i, int j) const { return q_over_scale[static_cast<std::size_t>(2 * i + j)]; }
};

/// g = alpha v / epsilon per (customer cell, listing cell).
Eigen::MatrixXd g_factor(const ExpandedMarket& m);

/// lambda / tau -> 0: choices are made at full availability s = rho.
LimitTable q_limit_demand(const ExpandedMarket& m);

/// lambda / tau -> infinity: every replenished listing is booked at once and
/// split across customer cells in proportion to phi g.
LimitTable q_limit_supply(const ExpandedMarket& m);

/// One customer type and one listing type with alpha = nu = 1 under
/// TSR(a_c, a_l). rho is the total listing mass.
LimitTable homogeneous_limits(double v, double v_treated, double epsilon, double rho, double a_c,
                              double a_l, Regime regime);

/// Closed forms for a market of two listings and one customer type.
struct TwoListingForms {
  double gte = 0.0;
  double cr_estimate = 0.0;
  double lr_estimate = 0.0;  ///< a_L = 1/2, equal to gte in this market
  double zeta = 0.0;         ///< booking probability of an arriving customer
  double eta = 0.0;          ///< share of those bookings made by treated customers
};

TwoListingForms two_listing_forms(double v, double v_treated, double epsilon, double lambda,
                                  double tau, double a_c);

/// First-order steady state for large balance:
/// s_c = rho_c nu_c / (balance sum_k phi_k g_kc). Warns on std::clog below
/// balance 100. Cells nobody books keep s_c = rho_c.
StateVector supply_state_approx(const ExpandedMarket& m, double balance);

}  // namespace marketlab
