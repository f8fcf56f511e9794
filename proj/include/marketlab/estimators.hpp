#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "marketlab/designs.hpp"
#include "marketlab/ledger.hpp"
#include "marketlab/market_model.hpp"
#include "marketlab/mean_field.hpp"

namespace marketlab {

enum class EstimatorKind { NaiveCR, NaiveLR, TSRN, TSRI, ClusterLR };

struct EstimatorId {
  EstimatorKind kind = EstimatorKind::NaiveCR;
  double k = 1.0;  ///< cannibalization weight, TSRI only

  static EstimatorId cr() { return {EstimatorKind::NaiveCR, 1.0}; }
  static EstimatorId lr() { return {EstimatorKind::NaiveLR, 1.0}; }
  static EstimatorId tsrn() { return {EstimatorKind::TSRN, 1.0}; }
  static EstimatorId tsri(double k) { return {EstimatorKind::TSRI, k}; }
  static EstimatorId cluster() { return {EstimatorKind::ClusterLR, 1.0}; }

  /// "cr", "lr", "tsrn", "tsri1", "tsri2", "tsri-<k>", "cluster".
  std::string name() const;

  friend bool operator==(const EstimatorId&, const EstimatorId&) = default;
  friend auto operator<=>(const EstimatorId&, const EstimatorId&) = default;
};

/// Inverse of EstimatorId::name; nullopt for unknown names or k <= 0.
std::optional<EstimatorId> parse_estimator(const std::string& name);

/// CR, LR, TSRN, TSRI-1, TSRI-2.
std::vector<EstimatorId> standard_estimators();

double est_cr(const BookingLedger& L, double a_c);
double est_lr(const BookingLedger& L, double a_l);
double est_tsrn(const BookingLedger& L, double a_c, double a_l);
double est_tsri(const BookingLedger& L, double a_c, double a_l, double beta, double k);
double est_cluster(const BookingLedger& L, double z);

/// Randomization fractions used by the naive designs and the TSR schedule.
struct EstimatorSettings {
  double a_c = 0.5;  ///< customer-side design
  double a_l = 0.5;  ///< listing-side design
  TsrSchedule schedule;
};

/// The design an estimator is computed from at a given balance. Cluster
/// designs depend on the market and are built by the caller.
DesignSpec design_for(const EstimatorId& id, double balance, const EstimatorSettings& settings);

/// Estimator applied to a ledger produced on `m` (its a_c / a_l are the
/// design fractions; Z = m.a_l for cluster designs).
double apply_estimator(const EstimatorId& id, const BookingLedger& L, const ExpandedMarket& m,
                       const EstimatorSettings& settings);

/// Q_11 under global treatment minus Q_00 under global control, both at the
/// mean-field steady state.
double gte_true(const MarketConfig& cfg, const Intervention& itv,
                const ValidationOptions& opts = {});

struct GteReport {
  double gte_true = 0.0;
  std::map<EstimatorId, double> estimates;
  std::map<EstimatorId, double> bias;
};

/// Mean-field value of each estimator on its own design. A transient window
/// replaces the steady-state ledger with the window average from s0 = rho.
GteReport mean_field_report(const MarketConfig& cfg, const Intervention& itv,
                            const std::vector<EstimatorId>& ids,
                            const EstimatorSettings& settings = {},
                            const std::optional<TransientWindow>& window = std::nullopt,
                            const ValidationOptions& opts = {});

}  // namespace marketlab
