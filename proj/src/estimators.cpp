#include "marketlab/estimators.hpp"

#include <cmath>
#include <cstdio>

#include "marketlab/errors.hpp"

namespace marketlab {

namespace {

double share(double a, const char* what) {
  if (!(a > 0.0)) {
    throw MarketError(ErrorKind::DegenerateArm, std::string(what) + " arm has zero mass");
  }
  return a;
}

void require_open_unit(double a, const char* what) {
  if (!(a > 0.0 && a < 1.0)) {
    throw MarketError(ErrorKind::DegenerateArm, std::string(what) + " must lie in (0, 1)");
  }
}

}  // namespace

std::string EstimatorId::name() const {
  switch (kind) {
    case EstimatorKind::NaiveCR: return "cr";
    case EstimatorKind::NaiveLR: return "lr";
    case EstimatorKind::TSRN: return "tsrn";
    case EstimatorKind::ClusterLR: return "cluster";
    case EstimatorKind::TSRI:
      if (k == 1.0) return "tsri1";
      if (k == 2.0) return "tsri2";
      char buf[48];
      std::snprintf(buf, sizeof buf, "tsri-%.17g", k);
      return buf;
  }
  return "unknown";
}

std::optional<EstimatorId> parse_estimator(const std::string& name) {
  if (name == "cr") return EstimatorId::cr();
  if (name == "lr") return EstimatorId::lr();
  if (name == "tsrn") return EstimatorId::tsrn();
  if (name == "cluster") return EstimatorId::cluster();
  if (name == "tsri1") return EstimatorId::tsri(1.0);
  if (name == "tsri2") return EstimatorId::tsri(2.0);
  if (name.rfind("tsri-", 0) == 0) {
    try {
      std::size_t used = 0;
      const double k = std::stod(name.substr(5), &used);
      if (used == name.size() - 5 && k > 0.0 && std::isfinite(k)) return EstimatorId::tsri(k);
    } catch (const std::exception&) {
    }
  }
  return std::nullopt;
}

std::vector<EstimatorId> standard_estimators() {
  return {EstimatorId::cr(), EstimatorId::lr(), EstimatorId::tsrn(), EstimatorId::tsri(1.0),
          EstimatorId::tsri(2.0)};
}

double est_cr(const BookingLedger& L, double a_c) {
  require_open_unit(a_c, "a_C");
  return L.q(1, 1) / a_c - L.q(0, 1) / (1.0 - a_c);
}

double est_lr(const BookingLedger& L, double a_l) {
  require_open_unit(a_l, "a_L");
  return L.q(1, 1) / a_l - L.q(1, 0) / (1.0 - a_l);
}

double est_tsrn(const BookingLedger& L, double a_c, double a_l) {
  const double treated = a_c * a_l;
  require_open_unit(treated, "a_C a_L");
  return L.q(1, 1) / treated - (L.q(0, 0) + L.q(0, 1) + L.q(1, 0)) / (1.0 - treated);
}

// Normalized rates are only formed when their weight is nonzero, so the
// endpoint weights beta = 0 and beta = 1 tolerate a degenerate opposite side.
double est_tsri(const BookingLedger& L, double a_c, double a_l, double beta, double k) {
  if (!(beta >= 0.0 && beta <= 1.0)) {
    throw MarketError(ErrorKind::DomainError, "beta must lie in [0, 1]");
  }
  if (!(k > 0.0)) throw MarketError(ErrorKind::NonPositiveParameter, "k must be positive");
  if (!(a_c > 0.0 && a_c <= 1.0 && a_l > 0.0 && a_l <= 1.0)) {
    throw MarketError(ErrorKind::DegenerateArm, "TSR fractions must lie in (0, 1]");
  }
  const auto hat = [&](int i, int j) {
    const double mc = i == 1 ? a_c : 1.0 - a_c;
    const double ml = j == 1 ? a_l : 1.0 - a_l;
    return L.q(i, j) / share(mc * ml, "TSR");
  };
  const double q11 = hat(1, 1);
  double value = 0.0;
  if (beta > 0.0) {
    const double q01 = hat(0, 1);
    double bracket = q11 - q01;
    if (beta < 1.0) bracket -= k * (1.0 - beta) * (hat(0, 0) - q01);
    value += beta * bracket;
  }
  if (beta < 1.0) {
    const double q10 = hat(1, 0);
    double bracket = q11 - q10;
    if (beta > 0.0) bracket -= k * beta * (hat(0, 0) - q10);
    value += (1.0 - beta) * bracket;
  }
  return value;
}

double est_cluster(const BookingLedger& L, double z) {
  require_open_unit(z, "Z");
  return L.q(1, 1) / z - L.q(1, 0) / (1.0 - z);
}

DesignSpec design_for(const EstimatorId& id, double balance, const EstimatorSettings& settings) {
  switch (id.kind) {
    case EstimatorKind::NaiveCR: return design::CustomerSide{settings.a_c};
    case EstimatorKind::NaiveLR: return design::ListingSide{settings.a_l};
    case EstimatorKind::TSRN:
    case EstimatorKind::TSRI: {
      const auto f = tsr_schedule(balance, settings.schedule);
      return design::TwoSided{f.a_c, f.a_l};
    }
    case EstimatorKind::ClusterLR: break;
  }
  throw MarketError(ErrorKind::InvalidConfig, "cluster estimator needs a cluster design");
}

double apply_estimator(const EstimatorId& id, const BookingLedger& L, const ExpandedMarket& m,
                       const EstimatorSettings& settings) {
  switch (id.kind) {
    case EstimatorKind::NaiveCR: return est_cr(L, m.a_c);
    case EstimatorKind::NaiveLR: return est_lr(L, m.a_l);
    case EstimatorKind::TSRN: return est_tsrn(L, m.a_c, m.a_l);
    case EstimatorKind::TSRI:
      return est_tsri(L, m.a_c, m.a_l, beta_weight(m.balance(), settings.schedule.c_exponent),
                      id.k);
    case EstimatorKind::ClusterLR: return est_cluster(L, m.a_l);
  }
  throw MarketError(ErrorKind::InvalidConfig, "unknown estimator");
}

double gte_true(const MarketConfig& cfg, const Intervention& itv, const ValidationOptions& opts) {
  const ExpandedMarket gc = expand_for_design(cfg, itv, design::GlobalControl{}, opts);
  const ExpandedMarket gt = expand_for_design(cfg, itv, design::GlobalTreatment{}, opts);
  return booking_rates_mf(gt).q(1, 1) - booking_rates_mf(gc).q(0, 0);
}

GteReport mean_field_report(const MarketConfig& cfg, const Intervention& itv,
                            const std::vector<EstimatorId>& ids,
                            const EstimatorSettings& settings,
                            const std::optional<TransientWindow>& window,
                            const ValidationOptions& opts) {
  GteReport report;
  report.gte_true = gte_true(cfg, itv, opts);
  // TSR estimators share the schedule design, so its ledger is solved once.
  std::map<std::string, std::pair<ExpandedMarket, BookingLedger>> solved;
  for (const auto& id : ids) {
    const DesignSpec d = design_for(id, cfg.balance(), settings);
    const std::string key = describe(d);
    auto it = solved.find(key);
    if (it == solved.end()) {
      ExpandedMarket m = expand_for_design(cfg, itv, d, opts);
      BookingLedger L = window ? booking_rates_mf(m, *window) : booking_rates_mf(m);
      it = solved.emplace(key, std::make_pair(std::move(m), L)).first;
    }
    const double est = apply_estimator(id, it->second.second, it->second.first, settings);
    report.estimates[id] = est;
    report.bias[id] = est - report.gte_true;
  }
  return report;
}

}  // namespace marketlab
