#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "marketlab/designs.hpp"
#include "marketlab/estimators.hpp"
#include "marketlab/finite_sim.hpp"
#include "marketlab/market_model.hpp"

namespace marketlab {

struct Window {
  double t_lo;
  double t_hi;
};

/// Divides the nominal window by min(lambda, tau).
Window effective_window(double lambda, double tau, double t0 = 5.0, double t1 = 25.0);

/// A market plus intervention, optionally with a clustered structure from
/// which cluster designs are built.
struct Experiment {
  MarketConfig config;
  Intervention intervention;
  ValidationOptions validation;
  std::optional<ClusterScenario> cluster;
};

Experiment homogeneous_experiment(double v, double v_treated, double lambda = 1.0,
                                  double tau = 1.0, double epsilon = 1.0, double alpha = 1.0);
/// Two customer types of equal share facing one listing type.
Experiment customer_het_experiment(double v1, double v2, double lift, double lambda = 1.0);
/// One customer type facing two listing types of equal mass.
Experiment listing_het_experiment(const std::vector<double>& v,
                                  const std::vector<double>& v_treated, double lambda = 1.0);
Experiment cluster_experiment(const ClusterScenario& cs);

/// Design used for `id` in this experiment; `treated_cluster` only matters
/// for the cluster estimator.
DesignSpec experiment_design(const Experiment& e, const EstimatorId& id,
                             const EstimatorSettings& settings, std::size_t treated_cluster = 0);

/// Mean-field estimator values, each on its own design. Cluster estimates use
/// cluster 0 as the treated one.
GteReport mean_field_estimates(const Experiment& e, const std::vector<EstimatorId>& ids,
                               const EstimatorSettings& settings = {},
                               const std::optional<TransientWindow>& window = std::nullopt);

using EstimateMap = std::map<EstimatorId, double>;

struct ReplicationSpec {
  std::vector<EstimatorId> estimators = standard_estimators();
  EstimatorSettings settings;
  SimConfig sim;  ///< its seed is ignored; each replication gets a child seed
  std::size_t reps = 500;
  std::uint64_t seed = 0;
  std::size_t threads = 1;
};

struct ReplicationError {
  std::size_t index;
  std::string message;
};

struct ReplicationResults {
  std::vector<std::optional<EstimateMap>> runs;  ///< by replication index
  std::vector<ReplicationError> failures;        ///< sorted by index

  std::vector<double> values(const EstimatorId& id) const;
  /// Throws ReplicationFailure naming the first failed replication.
  void throw_if_failed() const;
};

/// Independent simulations, one per replication, each producing every
/// requested estimator. Estimators that share a design share its ledger.
ReplicationResults run_replications(const Experiment& e, const ReplicationSpec& spec);

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

struct SummaryStats {
  double mean = 0.0;
  double bias = 0.0;
  double se = 0.0;    ///< across-replication standard deviation (n - 1)
  double rmse = 0.0;  ///< sqrt(bias^2 + se^2)
  Interval bias_ci;
  Interval se_ci;
  Interval rmse_ci;
  std::size_t reps = 0;
};

/// Percentile bootstrap over replications. Values are sorted first, so the
/// result does not depend on their order.
SummaryStats summarize(std::vector<double> estimates, double gte_true, std::size_t bootstrap_b,
                       double level, std::uint64_t seed);

struct StatRow {
  std::string scenario;
  std::string point;
  std::string estimator;
  std::string source;  ///< "sim" or "meanfield"
  double mean = 0.0;
  double bias = 0.0;
  double se = 0.0;
  double rmse = 0.0;
  double ci_lo = 0.0;  ///< bootstrap interval of the bias
  double ci_hi = 0.0;
  double gte_true = 0.0;
  std::size_t reps = 0;
  std::uint64_t seed = 0;
  std::optional<Interval> se_ci;
  std::optional<Interval> rmse_ci;
};

struct KurtzRow {
  std::size_t n;
  std::size_t seed_index;
  double sup_distance;
};

struct KurtzTable {
  std::vector<KurtzRow> rows;
  std::map<std::size_t, double> median_by_n;
};

/// Sup over a time grid of the max-norm distance between the simulated
/// availability and the mean-field trajectory started from the same state.
/// Seeds are paired across N.
KurtzTable kurtz_check(const ExpandedMarket& m, const std::vector<std::size_t>& ns,
                       std::size_t seeds, double horizon, std::uint64_t master_seed = 0,
                       double grid = 0.05);

enum class ScenarioKind {
  VaryBalance,
  VaryAvgUtility,
  VaryCustomerHet,
  VaryListingHet,
  VaryHTE,
  ClusterPreferenceRatio,
  FixedK,
};

std::string_view to_string(ScenarioKind k);
std::optional<ScenarioKind> parse_scenario(std::string_view name);

struct SweepSpec {
  ScenarioKind scenario = ScenarioKind::VaryBalance;
  std::vector<double> values;  ///< balances or y/x ratios; empty uses the defaults
  std::vector<EstimatorId> estimators = standard_estimators();
  EstimatorSettings settings;
  std::size_t reps = 500;
  SimConfig sim;
  bool scale_window = true;  ///< apply effective_window to sim.t0 / sim.t1
  std::size_t bootstrap_b = 1000;
  double level = 0.95;
  std::uint64_t seed = 0;
  std::size_t threads = 1;
  double balance = 1.0;  ///< lambda / tau for scenarios that do not vary it
  ClusterScenario cluster;
  std::size_t fixed_k = 50;
  bool simulate = true;  ///< false emits mean-field rows only
};

struct ScenarioPoint {
  std::string id;
  Experiment experiment;
  std::optional<Consideration> consideration;
};

std::vector<ScenarioPoint> scenario_points(const SweepSpec& spec);

struct PointError {
  std::string point;
  std::string message;
};

struct SweepResult {
  std::vector<StatRow> rows;
  std::vector<PointError> errors;
};

/// For every point and estimator, a simulation row and a mean-field row.
/// Errors are recorded per point and the sweep moves on.
SweepResult sweep(const SweepSpec& spec);

/// Rows of one point, as sweep produces them. Failed replications throw
/// unless `failures` is given, in which case they are reported there and
/// the statistics use the replications that finished.
std::vector<StatRow> point_rows(const SweepSpec& spec, const ScenarioPoint& point,
                                std::uint64_t point_seed,
                                std::vector<ReplicationError>* failures = nullptr);

}  // namespace marketlab
