#pragma once

#include <cstddef>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

namespace marketlab {

/// Availability mass per expanded listing cell, indexed by
/// ExpandedMarket::listing_cell(theta, j).
using StateVector = Eigen::VectorXd;

struct CustomerType {
  std::string id;
  double phi = 1.0;      ///< arrival share
  double epsilon = 1.0;  ///< scaled outside option
  std::vector<double> alpha;  ///< consideration probability per listing type
  std::vector<double> v;      ///< utility per listing type
};

struct ListingType {
  std::string id;
  double rho = 1.0;  ///< mass share
  double nu = 1.0;   ///< occupancy-rate multiplier
};

struct MarketConfig {
  std::vector<CustomerType> customers;
  std::vector<ListingType> listings;
  double lambda = 1.0;  ///< aggregate arrival rate per unit listing mass
  double tau = 1.0;     ///< replenishment scale

  std::size_t num_customer_types() const { return customers.size(); }
  std::size_t num_listing_types() const { return listings.size(); }
  double balance() const { return lambda / tau; }
};

/// Treated utilities and consideration probabilities, rows = customer types,
/// columns = listing types. An empty `alpha_treated` inherits the control
/// consideration probabilities.
struct Intervention {
  Eigen::MatrixXd v_treated;
  Eigen::MatrixXd alpha_treated;

  /// Treated utilities ṽ = lift · v, consideration unchanged.
  static Intervention multiplicative(const MarketConfig& cfg, double lift);
  /// ṽ = v and α̃ = α.
  static Intervention null(const MarketConfig& cfg);
};

namespace design {
struct GlobalControl {};
struct GlobalTreatment {};
struct CustomerSide { double a_c = 0.5; };
struct ListingSide { double a_l = 0.5; };
struct TwoSided { double a_c = 0.5; double a_l = 0.5; };
/// assignment[theta] is 1 when listing type theta is in the treated cluster.
struct Cluster { std::vector<int> assignment; };
}  // namespace design

using DesignSpec = std::variant<design::GlobalControl, design::GlobalTreatment,
                                design::CustomerSide, design::ListingSide,
                                design::TwoSided, design::Cluster>;

std::string describe(const DesignSpec& d);

/// Treatment-expanded market. Customer cells are indexed 2*gamma + i and
/// listing cells 2*theta + j, with i, j = 1 the treatment condition. Cells
/// with zero mass stay in the arrays so shapes do not depend on the design.
struct ExpandedMarket {
  std::size_t num_customer_types = 0;
  std::size_t num_listing_types = 0;
  Eigen::VectorXd phi;      ///< customer cell shares
  Eigen::VectorXd epsilon;  ///< customer cell outside options
  Eigen::VectorXd rho;      ///< listing cell masses
  Eigen::VectorXd nu;       ///< listing cell occupancy-rate multipliers
  Eigen::MatrixXd alpha;    ///< customer cell x listing cell
  Eigen::MatrixXd v;        ///< customer cell x listing cell
  double lambda = 1.0;
  double tau = 1.0;
  double a_c = 0.0;  ///< treated customer share
  double a_l = 0.0;  ///< treated listing mass

  static constexpr std::size_t customer_cell(std::size_t gamma, int i) {
    return 2 * gamma + static_cast<std::size_t>(i);
  }
  static constexpr std::size_t listing_cell(std::size_t theta, int j) {
    return 2 * theta + static_cast<std::size_t>(j);
  }

  std::size_t num_customer_cells() const { return 2 * num_customer_types; }
  std::size_t num_listing_cells() const { return 2 * num_listing_types; }

  /// Choice weights α·v.
  Eigen::MatrixXd weights() const { return alpha.cwiseProduct(v); }

  /// The same market re-massed to two-sided fractions (a_c, a_l); used to
  /// recover the global control (0,0) and global treatment (1,1) markets.
  ExpandedMarket with_fractions(double a_c, double a_l) const;

  /// The market with every treated parameter replaced by its control value.
  ExpandedMarket control_only() const;

  double balance() const { return lambda / tau; }
};

enum class InterventionClass { Positive, Negative, Indeterminate };

std::string_view to_string(InterventionClass c);

/// Options for validate_market. Zero utilities are only legal for the
/// separable cluster market (preference ratio 0).
struct ValidationOptions {
  bool allow_zero_utility = false;
};

MarketConfig validate_market(MarketConfig cfg, const ValidationOptions& opts = {});

void validate_intervention(const MarketConfig& cfg, const Intervention& itv,
                           const ValidationOptions& opts = {});

void validate_design(const MarketConfig& cfg, const DesignSpec& d);

ExpandedMarket expand_for_design(const MarketConfig& cfg, const Intervention& itv,
                                 const DesignSpec& d,
                                 const ValidationOptions& opts = {});

struct ChoiceProbabilities {
  Eigen::VectorXd listing;  ///< per listing cell
  double outside = 1.0;
};

/// Mean-field multinomial logit choice for one customer cell.
ChoiceProbabilities choice_probabilities(std::size_t customer_cell,
                                         const StateVector& s,
                                         const ExpandedMarket& m);

/// Throws StateOutOfBounds unless 0 <= s <= rho componentwise (1e-9 slack).
void check_state_bounds(const StateVector& s, const ExpandedMarket& m);

InterventionClass classify_intervention(const MarketConfig& cfg,
                                        const Intervention& itv);

}  // namespace marketlab
