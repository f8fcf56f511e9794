#include "marketlab/analysis_harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <thread>

#include "marketlab/errors.hpp"
#include "marketlab/mean_field.hpp"
#include "marketlab/rng.hpp"

namespace marketlab {

namespace {

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", x);
  return buf;
}

// Stream slot per design family, so adding an estimator never shifts the
// random numbers seen by the others.
std::uint64_t design_slot(const DesignSpec& d) {
  return static_cast<std::uint64_t>(d.index()) + 1;
}

double percentile(const std::vector<double>& sorted, double p) {
  if (sorted.size() == 1) return sorted.front();
  const double pos = p * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double w = pos - static_cast<double>(lo);
  return sorted[lo] + w * (sorted[hi] - sorted[lo]);
}

double sample_sd(const std::vector<double>& x, double mean) {
  double ss = 0.0;
  for (double v : x) ss += (v - mean) * (v - mean);
  return std::sqrt(ss / static_cast<double>(x.size() - 1));
}

double mean_of(const std::vector<double>& x) {
  return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

}  // namespace

Window effective_window(double lambda, double tau, double t0, double t1) {
  if (!(t0 >= 0.0 && t1 > t0)) {
    throw MarketError(ErrorKind::InvalidConfig, "window needs 0 <= T0 < T1");
  }
  if (!(lambda > 0.0 && tau > 0.0)) {
    throw MarketError(ErrorKind::NonPositiveParameter, "lambda and tau must be positive");
  }
  const double scale = std::min(lambda, tau);
  return {t0 / scale, t1 / scale};
}

Experiment homogeneous_experiment(double v, double v_treated, double lambda, double tau,
                                  double epsilon, double alpha) {
  MarketConfig cfg;
  cfg.lambda = lambda;
  cfg.tau = tau;
  cfg.customers = {{"customer", 1.0, epsilon, {alpha}, {v}}};
  cfg.listings = {{"listing", 1.0, 1.0}};
  cfg = validate_market(std::move(cfg));
  Intervention itv;
  itv.v_treated = Eigen::MatrixXd::Constant(1, 1, v_treated);
  validate_intervention(cfg, itv);
  return {cfg, itv, {}, std::nullopt};
}

Experiment customer_het_experiment(double v1, double v2, double lift, double lambda) {
  MarketConfig cfg;
  cfg.lambda = lambda;
  cfg.customers = {{"gamma1", 0.5, 1.0, {1.0}, {v1}}, {"gamma2", 0.5, 1.0, {1.0}, {v2}}};
  cfg.listings = {{"listing", 1.0, 1.0}};
  cfg = validate_market(std::move(cfg));
  Intervention itv = Intervention::multiplicative(cfg, lift);
  validate_intervention(cfg, itv);
  return {cfg, itv, {}, std::nullopt};
}

Experiment listing_het_experiment(const std::vector<double>& v,
                                  const std::vector<double>& v_treated, double lambda) {
  if (v.size() != v_treated.size() || v.empty()) {
    throw MarketError(ErrorKind::InvalidConfig, "utility vectors must match in length");
  }
  MarketConfig cfg;
  cfg.lambda = lambda;
  const double share = 1.0 / static_cast<double>(v.size());
  cfg.customers = {{"customer", 1.0, 1.0, std::vector<double>(v.size(), 1.0), v}};
  Intervention itv;
  itv.v_treated.resize(1, static_cast<Eigen::Index>(v.size()));
  for (std::size_t t = 0; t < v.size(); ++t) {
    cfg.listings.push_back({"theta" + std::to_string(t + 1), share, 1.0});
    itv.v_treated(0, static_cast<Eigen::Index>(t)) = v_treated[t];
  }
  cfg = validate_market(std::move(cfg));
  validate_intervention(cfg, itv);
  return {cfg, itv, {}, std::nullopt};
}

Experiment cluster_experiment(const ClusterScenario& cs) {
  ClusterMarket cm = cluster_market(cs, 0);
  return {cm.config, cm.intervention, cluster_validation(cs), cs};
}

DesignSpec experiment_design(const Experiment& e, const EstimatorId& id,
                             const EstimatorSettings& settings, std::size_t treated_cluster) {
  if (id.kind == EstimatorKind::ClusterLR) {
    if (!e.cluster) {
      throw MarketError(ErrorKind::InvalidConfig, "cluster estimator needs a cluster scenario");
    }
    return cluster_market(*e.cluster, treated_cluster).design;
  }
  return design_for(id, e.config.balance(), settings);
}

GteReport mean_field_estimates(const Experiment& e, const std::vector<EstimatorId>& ids,
                               const EstimatorSettings& settings,
                               const std::optional<TransientWindow>& window) {
  GteReport report;
  report.gte_true = gte_true(e.config, e.intervention, e.validation);
  std::map<std::string, std::pair<ExpandedMarket, BookingLedger>> solved;
  for (const auto& id : ids) {
    const DesignSpec d = experiment_design(e, id, settings);
    const std::string key = describe(d);
    auto it = solved.find(key);
    if (it == solved.end()) {
      ExpandedMarket m = expand_for_design(e.config, e.intervention, d, e.validation);
      BookingLedger L = window ? booking_rates_mf(m, *window) : booking_rates_mf(m);
      it = solved.emplace(key, std::make_pair(std::move(m), L)).first;
    }
    const double est = apply_estimator(id, it->second.second, it->second.first, settings);
    report.estimates[id] = est;
    report.bias[id] = est - report.gte_true;
  }
  return report;
}

std::vector<double> ReplicationResults::values(const EstimatorId& id) const {
  std::vector<double> out;
  out.reserve(runs.size());
  for (const auto& run : runs) {
    if (!run) continue;
    if (auto it = run->find(id); it != run->end()) out.push_back(it->second);
  }
  return out;
}

void ReplicationResults::throw_if_failed() const {
  if (failures.empty()) return;
  const auto& f = failures.front();
  throw MarketError(ErrorKind::ReplicationFailure,
                    "replication " + std::to_string(f.index) + ": " + f.message);
}

ReplicationResults run_replications(const Experiment& e, const ReplicationSpec& spec) {
  if (spec.estimators.empty()) {
    throw MarketError(ErrorKind::InvalidConfig, "no estimators requested");
  }
  const bool wants_cluster =
      std::any_of(spec.estimators.begin(), spec.estimators.end(),
                  [](const EstimatorId& id) { return id.kind == EstimatorKind::ClusterLR; });

  // Expanded markets per (treated cluster, design), built once up front.
  struct Plan {
    DesignSpec design;
    ExpandedMarket market;
    std::vector<EstimatorId> ids;
  };
  std::array<std::vector<Plan>, 2> plans;
  for (std::size_t tc = 0; tc < (wants_cluster ? 2u : 1u); ++tc) {
    for (const auto& id : spec.estimators) {
      const DesignSpec d = experiment_design(e, id, spec.settings, tc);
      auto it = std::find_if(plans[tc].begin(), plans[tc].end(),
                             [&](const Plan& p) { return describe(p.design) == describe(d); });
      if (it == plans[tc].end()) {
        plans[tc].push_back({d, expand_for_design(e.config, e.intervention, d, e.validation), {}});
        it = std::prev(plans[tc].end());
      }
      it->ids.push_back(id);
    }
  }

  ReplicationResults out;
  out.runs.resize(spec.reps);
  std::vector<std::optional<std::string>> errors(spec.reps);

  auto run_one = [&](std::size_t r) {
    const std::uint64_t rep_seed = child_seed(spec.seed, r);
    std::size_t treated_cluster = 0;
    if (wants_cluster) {
      Philox4x32 coin(rep_seed);
      treated_cluster = coin.uniform() < 0.5 ? 0 : 1;
    }
    EstimateMap est;
    for (const Plan& plan : plans[treated_cluster]) {
      SimConfig sc = spec.sim;
      sc.seed = child_seed(rep_seed, design_slot(plan.design));
      sc.trace_interval = 0.0;
      sc.record_events = false;
      const SimulationResult sim = simulate(plan.market, sc);
      for (const auto& id : plan.ids) {
        est[id] = apply_estimator(id, sim.ledger, plan.market, spec.settings);
      }
    }
    return est;
  };

  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (std::size_t r = next++; r < spec.reps; r = next++) {
      try {
        out.runs[r] = run_one(r);
      } catch (const std::exception& ex) {
        errors[r] = ex.what();
      }
    }
  };
  const std::size_t threads = std::clamp<std::size_t>(spec.threads, 1, std::max<std::size_t>(spec.reps, 1));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  for (std::size_t r = 0; r < spec.reps; ++r) {
    if (errors[r]) out.failures.push_back({r, *errors[r]});
  }
  return out;
}

SummaryStats summarize(std::vector<double> estimates, double gte_true, std::size_t bootstrap_b,
                       double level, std::uint64_t seed) {
  if (estimates.size() < 2) {
    throw MarketError(ErrorKind::TooFewReplications, "summaries need at least two estimates");
  }
  if (bootstrap_b < 1 || !(level > 0.0 && level < 1.0)) {
    throw MarketError(ErrorKind::InvalidConfig, "bootstrap needs B >= 1 and level in (0, 1)");
  }
  std::sort(estimates.begin(), estimates.end());
  const std::size_t n = estimates.size();

  SummaryStats s;
  s.reps = n;
  s.mean = mean_of(estimates);
  s.bias = s.mean - gte_true;
  s.se = sample_sd(estimates, s.mean);
  s.rmse = std::sqrt(s.bias * s.bias + s.se * s.se);

  Philox4x32 rng(seed);
  std::vector<double> boot_bias(bootstrap_b), boot_se(bootstrap_b), boot_rmse(bootstrap_b);
  std::vector<double> sample(n);
  for (std::size_t b = 0; b < bootstrap_b; ++b) {
    for (std::size_t i = 0; i < n; ++i) {
      const auto idx = std::min(static_cast<std::size_t>(rng.uniform() * static_cast<double>(n)), n - 1);
      sample[i] = estimates[idx];
    }
    const double m = mean_of(sample);
    const double sd = sample_sd(sample, m);
    boot_bias[b] = m - gte_true;
    boot_se[b] = sd;
    boot_rmse[b] = std::sqrt(boot_bias[b] * boot_bias[b] + sd * sd);
  }
  const double lo = (1.0 - level) / 2.0;
  const double hi = 1.0 - lo;
  auto interval = [&](std::vector<double>& v) {
    std::sort(v.begin(), v.end());
    return Interval{percentile(v, lo), percentile(v, hi)};
  };
  s.bias_ci = interval(boot_bias);
  s.se_ci = interval(boot_se);
  s.rmse_ci = interval(boot_rmse);
  return s;
}

KurtzTable kurtz_check(const ExpandedMarket& m, const std::vector<std::size_t>& ns,
                       std::size_t seeds, double horizon, std::uint64_t master_seed, double grid) {
  if (ns.size() < 2) throw MarketError(ErrorKind::InvalidConfig, "kurtz check needs two or more N");
  if (!(horizon > 0.0) || !(grid > 0.0) || seeds < 1) {
    throw MarketError(ErrorKind::InvalidConfig, "kurtz check needs positive horizon, grid, seeds");
  }
  KurtzTable table;
  for (std::size_t n : ns) {
    std::vector<double> distances;
    for (std::size_t s = 0; s < seeds; ++s) {
      SimConfig sc;
      sc.n_listings = n;
      sc.t0 = 0.0;
      sc.t1 = horizon;
      sc.seed = child_seed(master_seed, s);
      sc.trace_interval = grid;
      const SimulationResult sim = simulate(m, sc);
      const auto& trace = sim.trace;

      StateVector y = trace.availability.front().cwiseMin(m.rho);
      double sup = (trace.availability.front() - y).lpNorm<Eigen::Infinity>();
      for (std::size_t g = 1; g < trace.times.size(); ++g) {
        y = integrate(y, m, trace.times[g] - trace.times[g - 1]).terminal();
        sup = std::max(sup, (trace.availability[g] - y).lpNorm<Eigen::Infinity>());
      }
      table.rows.push_back({n, s, sup});
      distances.push_back(sup);
    }
    std::sort(distances.begin(), distances.end());
    table.median_by_n[n] = percentile(distances, 0.5);
  }
  return table;
}

std::string_view to_string(ScenarioKind k) {
  switch (k) {
    case ScenarioKind::VaryBalance: return "vary-balance";
    case ScenarioKind::VaryAvgUtility: return "vary-avg-utility";
    case ScenarioKind::VaryCustomerHet: return "vary-customer-het";
    case ScenarioKind::VaryListingHet: return "vary-listing-het";
    case ScenarioKind::VaryHTE: return "vary-hte";
    case ScenarioKind::ClusterPreferenceRatio: return "cluster-preference-ratio";
    case ScenarioKind::FixedK: return "fixed-k";
  }
  return "unknown";
}

std::optional<ScenarioKind> parse_scenario(std::string_view name) {
  for (auto k : {ScenarioKind::VaryBalance, ScenarioKind::VaryAvgUtility,
                 ScenarioKind::VaryCustomerHet, ScenarioKind::VaryListingHet, ScenarioKind::VaryHTE,
                 ScenarioKind::ClusterPreferenceRatio, ScenarioKind::FixedK}) {
    if (to_string(k) == name) return k;
  }
  return std::nullopt;
}

std::vector<ScenarioPoint> scenario_points(const SweepSpec& spec) {
  constexpr double kLift = 1.25;
  const double lambda = spec.balance;
  std::vector<ScenarioPoint> points;
  switch (spec.scenario) {
    case ScenarioKind::VaryBalance: {
      const std::vector<double> balances =
          spec.values.empty() ? std::vector<double>{0.1, 1.0, 10.0} : spec.values;
      for (double b : balances) {
        points.push_back({"balance=" + fmt(b), homogeneous_experiment(0.315, 0.3937, b), {}});
      }
      break;
    }
    case ScenarioKind::VaryAvgUtility:
      points.push_back({"low", homogeneous_experiment(0.155, 0.155 * kLift, lambda), {}});
      points.push_back({"medium", homogeneous_experiment(0.315, 0.315 * kLift, lambda), {}});
      points.push_back({"high", homogeneous_experiment(0.62, 0.62 * kLift, lambda), {}});
      break;
    case ScenarioKind::VaryCustomerHet:
      points.push_back({"homogeneous", customer_het_experiment(0.315, 0.315, kLift, lambda), {}});
      points.push_back({"het-l", customer_het_experiment(0.17, 0.51, kLift, lambda), {}});
      points.push_back({"het-h", customer_het_experiment(0.12, 0.46, kLift, lambda), {}});
      break;
    case ScenarioKind::VaryListingHet:
      for (const auto& [id, v] : std::vector<std::pair<std::string, std::vector<double>>>{
               {"homogeneous", {0.315, 0.315}}, {"het-l", {0.25, 0.4}}, {"het-h", {0.1, 0.6}}}) {
        points.push_back({id, listing_het_experiment(v, {v[0] * kLift, v[1] * kLift}, lambda), {}});
      }
      break;
    case ScenarioKind::VaryHTE: {
      const std::vector<double> v{0.27, 0.351};
      points.push_back({"multiplicative", listing_het_experiment(v, {0.27 * kLift, 0.351 * kLift}, lambda), {}});
      points.push_back({"hte-amp", listing_het_experiment(v, {0.2727, 0.5265}, lambda), {}});
      points.push_back({"hte-rev", listing_het_experiment(v, {0.432, 0.355}, lambda), {}});
      break;
    }
    case ScenarioKind::ClusterPreferenceRatio: {
      const std::vector<double> ratios =
          spec.values.empty() ? std::vector<double>{0.0, 0.5, 1.0} : spec.values;
      for (double r : ratios) {
        ClusterScenario cs = spec.cluster;
        cs.y = r * cs.x;
        cs.lambda = lambda * cs.tau;
        points.push_back({"y/x=" + fmt(r), cluster_experiment(cs), {}});
      }
      break;
    }
    case ScenarioKind::FixedK: {
      // The mean-field rows use the Bernoulli model with alpha = K / N.
      const double alpha =
          std::min(1.0, static_cast<double>(spec.fixed_k) / static_cast<double>(spec.sim.n_listings));
      points.push_back({"k=" + std::to_string(spec.fixed_k),
                        homogeneous_experiment(6.0, 7.5, lambda, 1.0, 1.0, alpha),
                        FixedK{spec.fixed_k}});
      break;
    }
  }
  return points;
}

std::vector<StatRow> point_rows(const SweepSpec& spec, const ScenarioPoint& point,
                                std::uint64_t point_seed,
                                std::vector<ReplicationError>* failures) {
  const Experiment& e = point.experiment;
  const GteReport mf = mean_field_estimates(e, spec.estimators, spec.settings);
  const std::string scenario(to_string(spec.scenario));

  std::optional<ReplicationResults> results;
  if (spec.simulate) {
    ReplicationSpec rs;
    rs.estimators = spec.estimators;
    rs.settings = spec.settings;
    rs.sim = spec.sim;
    if (point.consideration) rs.sim.consideration = *point.consideration;
    if (spec.scale_window) {
      const Window w = effective_window(e.config.lambda, e.config.tau, spec.sim.t0, spec.sim.t1);
      rs.sim.t0 = w.t_lo;
      rs.sim.t1 = w.t_hi;
    }
    rs.reps = spec.reps;
    rs.seed = point_seed;
    rs.threads = spec.threads;
    results = run_replications(e, rs);
    if (failures) {
      failures->insert(failures->end(), results->failures.begin(), results->failures.end());
    } else {
      results->throw_if_failed();
    }
  }

  std::vector<StatRow> rows;
  for (std::size_t q = 0; q < spec.estimators.size(); ++q) {
    const EstimatorId& id = spec.estimators[q];
    if (results) {
      const SummaryStats st = summarize(results->values(id), mf.gte_true, spec.bootstrap_b,
                                        spec.level, child_seed(point_seed, 1000 + q));
      rows.push_back({scenario, point.id, id.name(), "sim", st.mean, st.bias, st.se, st.rmse,
                      st.bias_ci.lo, st.bias_ci.hi, mf.gte_true, st.reps, spec.seed, st.se_ci,
                      st.rmse_ci});
    }
    const double bias = mf.bias.at(id);
    rows.push_back({scenario, point.id, id.name(), "meanfield", mf.estimates.at(id), bias, 0.0,
                    std::abs(bias), bias, bias, mf.gte_true, 0, spec.seed, std::nullopt,
                    std::nullopt});
  }
  return rows;
}

SweepResult sweep(const SweepSpec& spec) {
  if (spec.simulate && spec.reps < 2) {
    throw MarketError(ErrorKind::TooFewReplications, "sweeps need reps >= 2");
  }
  if (spec.simulate && spec.bootstrap_b < 100) {
    throw MarketError(ErrorKind::InvalidConfig, "sweeps need B >= 100");
  }
  SweepResult result;
  const auto points = scenario_points(spec);
  for (std::size_t p = 0; p < points.size(); ++p) {
    try {
      auto rows = point_rows(spec, points[p], child_seed(spec.seed, p));
      result.rows.insert(result.rows.end(), rows.begin(), rows.end());
    } catch (const std::exception& ex) {
      result.errors.push_back({points[p].id, ex.what()});
    }
  }
  return result;
}

}  // namespace marketlab
