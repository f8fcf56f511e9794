#include "commands.hpp"

#include <cstdlib>
#include <fstream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "marketlab/analysis_harness.hpp"
#include "marketlab/asymptotics.hpp"
#include "marketlab/config.hpp"
#include "marketlab/errors.hpp"
#include "marketlab/mean_field.hpp"
#include "marketlab/report.hpp"
#include "marketlab/rng.hpp"

namespace marketlab::cli {

namespace {

using nlohmann::json;

struct Options {
  std::string config_path;
  std::string preset;
  std::string out_path;
  std::string format = "csv";
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> reps;
  std::optional<std::size_t> threads;
  bool meanfield_only = false;
};

class Failure : public std::runtime_error {
 public:
  Failure(int code, const std::string& msg) : std::runtime_error(msg), code_(code) {}
  int code() const { return code_; }

 private:
  int code_;
};

int exit_code_for(ErrorKind k) {
  switch (k) {
    case ErrorKind::NoConvergence:
    case ErrorKind::StepSizeUnderflow:
    case ErrorKind::StateOutOfBounds:
      return kSolver;
    case ErrorKind::ReplicationFailure:
      return kReplication;
    default:
      return kValidation;
  }
}

std::optional<std::size_t> env_threads() {
  const char* raw = std::getenv("MARKETLAB_THREADS");
  if (!raw || !*raw) return std::nullopt;
  char* end = nullptr;
  const unsigned long v = std::strtoul(raw, &end, 10);
  if (*end != '\0' || v == 0) return std::nullopt;
  return static_cast<std::size_t>(v);
}

RunConfig resolve_config(const Options& o) {
  if (!o.config_path.empty() && !o.preset.empty()) {
    throw MarketError(ErrorKind::InvalidConfig, "use either --config or --preset");
  }
  RunConfig rc = !o.config_path.empty() ? load_config(o.config_path)
                 : !o.preset.empty()    ? preset_config(o.preset)
                                        : preset_config("calibration");
  auto& a = rc.analysis;
  if (o.seed) a.seed = *o.seed;
  if (o.reps) {
    if (*o.reps < 2) throw MarketError(ErrorKind::InvalidConfig, "--reps must be at least 2");
    a.reps = *o.reps;
  }
  if (o.threads) {
    a.threads = *o.threads;
  } else if (auto t = env_threads()) {
    a.threads = *t;
  }
  if (a.threads < 1) throw MarketError(ErrorKind::InvalidConfig, "--threads must be at least 1");
  if (o.meanfield_only) a.simulate = false;
  return rc;
}

std::string label(const Options& o) {
  if (!o.preset.empty()) return o.preset;
  return o.config_path.empty() ? "calibration" : "config";
}

json rates_json(const std::array<double, 4>& q) {
  return {{"q00", q[0]}, {"q01", q[1]}, {"q10", q[2]}, {"q11", q[3]}};
}

json cells_json(const Experiment& e, const StateVector& s, const ExpandedMarket& m) {
  json cells = json::array();
  for (std::size_t t = 0; t < m.num_listing_types; ++t) {
    for (int j = 0; j < 2; ++j) {
      const auto c = static_cast<Eigen::Index>(ExpandedMarket::listing_cell(t, j));
      cells.push_back({{"listing", e.config.listings[t].id}, {"j", j}, {"rho", m.rho(c)},
                       {"s", s(c)}});
    }
  }
  return cells;
}

std::vector<EstimatorId> report_estimators(const Experiment& e, const SweepSpec& a) {
  std::vector<EstimatorId> ids;
  for (const auto& id : a.estimators) {
    if (id.kind != EstimatorKind::ClusterLR || e.cluster) ids.push_back(id);
  }
  return ids;
}

json estimates_json(const GteReport& r) {
  json out = json::object();
  for (const auto& [id, est] : r.estimates) {
    out[id.name()] = {{"estimate", est}, {"bias", r.bias.at(id)}};
  }
  return out;
}

std::string cmd_steady(const RunConfig& rc) {
  const Experiment& e = rc.experiment;
  const ExpandedMarket m = expand_for_design(e.config, e.intervention, rc.design, e.validation);
  const SteadyState ss = steady_state(m);
  const BookingLedger L = booking_rates_mf(m);

  json doc;
  doc["design"] = describe(rc.design);
  doc["lambda"] = m.lambda;
  doc["tau"] = m.tau;
  doc["steady_state"] = {{"cells", cells_json(e, ss.s_star, m)},
                         {"residual_norm", ss.residual_norm},
                         {"iterations", ss.solver_iterations},
                         {"used_fallback", ss.used_fallback}};
  doc["rates"] = rates_json(L.rates);
  const GteReport report =
      mean_field_estimates(e, report_estimators(e, rc.analysis), rc.analysis.settings);
  doc["gte"] = report.gte_true;
  doc["meanfield_estimates"] = estimates_json(report);
  if (m.balance() >= 100.0) {
    const StateVector approx = supply_state_approx(m, m.balance());
    double worst = 0.0;
    for (Eigen::Index c = 0; c < approx.size(); ++c) {
      if (m.rho(c) > 0.0) worst = std::max(worst, std::abs(approx(c) / ss.s_star(c) - 1.0));
    }
    const LimitTable sup = q_limit_supply(m);
    doc["supply_diagnostics"] = {{"approx_state", cells_json(e, approx, m)},
                                 {"max_relative_gap", worst},
                                 {"q_over_tau_limit", rates_json(sup.q_over_scale)},
                                 {"gte_over_tau_limit", sup.gte_over_scale}};
  }
  return doc.dump(2) + "\n";
}

json limit_json(const Experiment& e, const EstimatorSettings& settings, Regime regime,
                const DesignSpec& d) {
  const auto table_for = [&](const DesignSpec& spec) {
    const ExpandedMarket m = expand_for_design(e.config, e.intervention, spec, e.validation);
    return std::make_pair(m, regime == Regime::DemandLimit ? q_limit_demand(m) : q_limit_supply(m));
  };
  const auto [m, table] = table_for(d);
  json est = json::object();
  for (const auto& id : standard_estimators()) {
    DesignSpec spec = design_for(id, 1.0, settings);
    if (std::holds_alternative<design::TwoSided>(spec)) {
      // limiting fractions of the schedule
      spec = regime == Regime::DemandLimit
                 ? DesignSpec{design::TwoSided{settings.schedule.a_bar_c, 1.0}}
                 : DesignSpec{design::TwoSided{1.0, settings.schedule.a_bar_l}};
    }
    auto [mm, t] = table_for(spec);
    const double beta = regime == Regime::DemandLimit ? 1.0 : 0.0;
    const BookingLedger L = BookingLedger::from_rates(t.q(0, 0), t.q(0, 1), t.q(1, 0), t.q(1, 1));
    const double value = id.kind == EstimatorKind::TSRI ? est_tsri(L, mm.a_c, mm.a_l, beta, id.k)
                                                        : apply_estimator(id, L, mm, settings);
    est[id.name()] = {{"estimate", value}, {"bias", value - table.gte_over_scale}};
  }
  return {{"design", describe(d)},
          {"q_over_scale", rates_json(table.q_over_scale)},
          {"gte_over_scale", table.gte_over_scale},
          {"estimates", est}};
}

std::string cmd_asymptotics(const RunConfig& rc) {
  const Experiment& e = rc.experiment;
  json doc;
  doc["scale"] = {{"demand", "lambda"}, {"supply", "tau"}};
  doc["demand"] = limit_json(e, rc.analysis.settings, Regime::DemandLimit, rc.design);
  doc["supply"] = limit_json(e, rc.analysis.settings, Regime::SupplyLimit, rc.design);
  const auto& cfg = e.config;
  if (cfg.customers.size() == 1 && cfg.listings.size() == 1 && cfg.customers[0].alpha[0] == 1.0 &&
      e.intervention.alpha_treated.size() == 0) {
    const double v = cfg.customers[0].v[0];
    const double vt = e.intervention.v_treated(0, 0);
    const double eps = cfg.customers[0].epsilon;
    const auto f = two_listing_forms(v, vt, eps, cfg.lambda, cfg.tau, rc.analysis.settings.a_c);
    doc["two_listing"] = {{"gte", f.gte}, {"cr_estimate", f.cr_estimate},
                          {"lr_estimate", f.lr_estimate}, {"zeta", f.zeta}, {"eta", f.eta}};
  }
  return doc.dump(2) + "\n";
}

std::string render_rows(const std::vector<StatRow>& rows, const std::vector<PointError>& errors,
                        const std::string& format, const json& extra = json()) {
  std::ostringstream os;
  if (format == "json") {
    std::ostringstream inner;
    write_stat_json(inner, rows, errors);
    json doc = json::parse(inner.str());
    if (!extra.is_null()) doc["notes"] = extra;
    os << doc.dump(2) << '\n';
  } else {
    write_stat_csv(os, rows);
  }
  return os.str();
}

std::string cmd_simulate(const RunConfig& rc, const Options& o, std::vector<PointError>& errors) {
  SweepSpec spec = rc.analysis;
  spec.estimators = report_estimators(rc.experiment, spec);
  if (spec.estimators.empty()) throw MarketError(ErrorKind::InvalidConfig, "no usable estimators");
  ScenarioPoint point{label(o), rc.experiment, std::nullopt};
  std::vector<ReplicationError> failures;
  std::vector<StatRow> rows = point_rows(spec, point, spec.seed, &failures);
  for (auto& r : rows) r.scenario = "simulate";
  for (const auto& f : failures) {
    errors.push_back({point.id, "replication " + std::to_string(f.index) + ": " + f.message});
  }
  return render_rows(rows, errors, o.format);
}

bool monotone(const std::vector<double>& xs) {
  bool up = true;
  bool down = true;
  for (std::size_t i = 1; i < xs.size(); ++i) {
    up = up && xs[i] >= xs[i - 1] - 1e-12;
    down = down && xs[i] <= xs[i - 1] + 1e-12;
  }
  return up || down;
}

std::string cmd_sweep(SweepSpec spec, const Options& o, std::vector<PointError>& errors,
                      bool cluster_compare) {
  json notes;
  if (cluster_compare) {
    spec.scenario = ScenarioKind::ClusterPreferenceRatio;
    if (std::none_of(spec.estimators.begin(), spec.estimators.end(),
                     [](const EstimatorId& id) { return id.kind == EstimatorKind::ClusterLR; })) {
      spec.estimators.insert(spec.estimators.begin(), EstimatorId::cluster());
    }
  }
  SweepResult result = sweep(spec);
  errors = result.errors;
  if (cluster_compare) {
    std::vector<double> bias;
    for (const auto& r : result.rows) {
      if (r.source == "meanfield" && r.estimator == "cluster") bias.push_back(r.bias);
    }
    const bool mono = monotone(bias);
    notes = {{"meanfield_cluster_bias_monotone_in_ratio", mono}};
    if (o.format != "json") {
      std::clog << "mean-field cluster bias " << (mono ? "is" : "is not")
                << " monotone in y/x over the grid\n";
    }
  }
  return render_rows(result.rows, errors, o.format, notes);
}

void emit(const Options& o, const std::string& text, std::ostream& out) {
  if (o.out_path.empty()) {
    out << text;
    return;
  }
  std::ofstream f(o.out_path, std::ios::binary | std::ios::trunc);
  if (!f) throw Failure(kValidation, "cannot write " + o.out_path);
  f << text;
  if (!f) throw Failure(kValidation, "write failed for " + o.out_path);
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Two-sided marketplace experiment simulator", "marketlab"};
  app.require_subcommand(1);
  Options o;

  auto add_common = [&o](CLI::App* sub) {
    sub->add_option("--config", o.config_path, "JSON run configuration");
    sub->add_option("--preset", o.preset, "built-in configuration name");
    sub->add_option("--out", o.out_path, "output file (default: standard output)");
    sub->add_option("--seed", o.seed, "master seed");
    sub->add_option("--reps", o.reps, "replications");
    sub->add_option("--threads", o.threads, "worker threads");
    sub->add_option("--format", o.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
  };
  auto* steady = app.add_subcommand("steady", "mean-field steady state, booking rates and GTE");
  auto* simulate = app.add_subcommand("simulate", "replicated finite-N experiments");
  auto* asym = app.add_subcommand("asymptotics", "demand and supply limit tables");
  auto* sweep_cmd = app.add_subcommand("sweep", "scenario sweep with sim and mean-field rows");
  auto* cluster = app.add_subcommand("cluster-compare", "cluster vs TSR over preference ratios");
  auto* list = app.add_subcommand("presets", "list built-in presets");
  std::string show_name;
  auto* show = app.add_subcommand("show-preset", "print a preset's JSON document");
  show->add_option("name", show_name)->required();
  for (auto* sub : {steady, simulate, asym, sweep_cmd, cluster}) add_common(sub);
  for (auto* sub : {sweep_cmd, cluster}) {
    sub->add_flag("--meanfield-only", o.meanfield_only, "skip the simulation rows");
  }

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kValidation;
  }

  std::vector<PointError> errors;
  try {
    if (list->parsed()) {
      for (const auto& name : preset_names()) out << name << '\n';
      return kOk;
    }
    if (show->parsed()) {
      out << preset_text(show_name) << '\n';
      return kOk;
    }
    const RunConfig rc = resolve_config(o);
    std::string text;
    if (steady->parsed() || asym->parsed()) {
      if (o.format != "csv" && o.format != "json") throw Failure(kValidation, "bad format");
      text = steady->parsed() ? cmd_steady(rc) : cmd_asymptotics(rc);
    } else if (simulate->parsed()) {
      text = cmd_simulate(rc, o, errors);
    } else {
      text = cmd_sweep(rc.analysis, o, errors, cluster->parsed());
    }
    emit(o, text, out);
  } catch (const Failure& f) {
    err << "error: " << f.what() << '\n';
    return f.code();
  } catch (const MarketError& e) {
    err << "error: " << e.what() << '\n';
    return exit_code_for(e.kind());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kValidation;
  }
  if (!errors.empty()) {
    for (const auto& e : errors) err << "error: " << e.point << ": " << e.message << '\n';
    return kReplication;
  }
  return kOk;
}

}  // namespace marketlab::cli
