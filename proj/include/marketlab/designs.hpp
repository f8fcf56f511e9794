#pragma once

#include <cstddef>
#include <utility>

#include "marketlab/market_model.hpp"

namespace marketlab {

/// Balance-dependent TSR fractions. The exponent c scales the balance inside
/// every exponential.
struct TsrSchedule {
  double a_bar_c = 0.5;
  double a_bar_l = 0.5;
  double c_exponent = 1.0;
};

struct TsrFractions {
  double a_c;
  double a_l;
};

/// a_C moves from a_bar_c to 1 and a_L from 1 to a_bar_l as balance grows.
TsrFractions tsr_schedule(double balance, const TsrSchedule& sched = {});

/// exp(-c * balance); 1 puts all weight on the customer-side form.
double beta_weight(double balance, double c_exponent = 1.0);

/// Two clusters of one customer and one listing type each. Customers get
/// utility x inside their cluster and y across it.
struct ClusterScenario {
  double x = 0.5;
  double y = 0.25;
  double delta = 1.3;
  double epsilon = 1.0;
  double alpha = 1.0;
  double lambda = 1.0;
  double tau = 1.0;
};

struct ClusterMarket {
  MarketConfig config;
  Intervention intervention;
  design::Cluster design;
};

void validate_cluster_scenario(const ClusterScenario& cs);

/// Builds the clustered market. `treated_cluster` (0 or 1) picks which
/// listing type is assigned to treatment.
ClusterMarket cluster_market(const ClusterScenario& cs, std::size_t treated_cluster = 0);

/// Validation options the cluster market needs (y = 0 gives zero utilities).
ValidationOptions cluster_validation(const ClusterScenario& cs);

}  // namespace marketlab
