#include "marketlab/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "marketlab/errors.hpp"

namespace marketlab {

namespace {

using nlohmann::json;

[[noreturn]] void invalid(const std::string& msg) {
  throw MarketError(ErrorKind::InvalidConfig, msg);
}

void check_keys(const json& obj, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!obj.is_object()) invalid(where + " must be an object");
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [key, value] : obj.items()) {
    if (!ok.count(key)) invalid("unknown key '" + key + "' in " + where);
  }
}

template <class T>
T get_or(const json& obj, const char* key, T fallback, const std::string& where) {
  if (!obj.contains(key)) return fallback;
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception&) {
    invalid(where + "." + key + " has the wrong type");
  }
}

double number(const json& obj, const char* key, double fallback, const std::string& where) {
  return get_or<double>(obj, key, fallback, where);
}

std::size_t count(const json& obj, const char* key, std::size_t fallback, const std::string& where) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_number_unsigned()) invalid(where + "." + key + " must be a non-negative integer");
  return v.get<std::size_t>();
}

std::vector<double> number_list(const json& v, const std::string& where) {
  if (v.is_number()) return {v.get<double>()};
  if (!v.is_array()) invalid(where + " must be a number or an array of numbers");
  std::vector<double> out;
  for (const auto& x : v) {
    if (!x.is_number()) invalid(where + " must contain numbers only");
    out.push_back(x.get<double>());
  }
  return out;
}

Eigen::MatrixXd matrix(const json& v, const std::string& where) {
  if (!v.is_array() || v.empty()) invalid(where + " must be a non-empty array of rows");
  const std::size_t cols = v.front().is_array() ? v.front().size() : 0;
  Eigen::MatrixXd m(static_cast<Eigen::Index>(v.size()), static_cast<Eigen::Index>(cols));
  for (std::size_t r = 0; r < v.size(); ++r) {
    const auto row = number_list(v[r], where);
    if (!v[r].is_array() || row.size() != cols) invalid(where + " rows must have equal length");
    for (std::size_t c = 0; c < cols; ++c) {
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = row[c];
    }
  }
  return m;
}

ClusterScenario parse_cluster(const json& j, ClusterScenario cs, const std::string& where,
                              bool allow_y) {
  if (allow_y) {
    check_keys(j, {"x", "y", "delta", "epsilon", "alpha", "lambda", "tau"}, where);
    cs.y = number(j, "y", cs.y, where);
  } else {
    check_keys(j, {"x", "delta", "epsilon", "alpha", "tau"}, where);
  }
  cs.x = number(j, "x", cs.x, where);
  cs.delta = number(j, "delta", cs.delta, where);
  cs.epsilon = number(j, "epsilon", cs.epsilon, where);
  cs.alpha = number(j, "alpha", cs.alpha, where);
  cs.lambda = number(j, "lambda", cs.lambda, where);
  cs.tau = number(j, "tau", cs.tau, where);
  return cs;
}

Experiment parse_experiment(const json& doc) {
  if (!doc.contains("market")) return homogeneous_experiment(0.315, 0.3937);
  const json& mj = doc.at("market");
  if (mj.contains("cluster")) {
    check_keys(mj, {"cluster"}, "market");
    if (doc.contains("intervention")) invalid("cluster markets define their own intervention");
    return cluster_experiment(parse_cluster(mj.at("cluster"), {}, "market.cluster", true));
  }
  check_keys(mj, {"lambda", "tau", "customers", "listings"}, "market");
  MarketConfig cfg;
  cfg.lambda = number(mj, "lambda", 1.0, "market");
  cfg.tau = number(mj, "tau", 1.0, "market");
  if (!mj.contains("customers") || !mj.contains("listings")) {
    invalid("market needs customers and listings");
  }
  const json& lj = mj.at("listings");
  if (!lj.is_array()) invalid("market.listings must be an array");
  for (std::size_t t = 0; t < lj.size(); ++t) {
    const std::string where = "market.listings[" + std::to_string(t) + "]";
    check_keys(lj[t], {"id", "rho", "nu"}, where);
    cfg.listings.push_back({get_or<std::string>(lj[t], "id", "theta" + std::to_string(t + 1), where),
                            number(lj[t], "rho", 1.0, where), number(lj[t], "nu", 1.0, where)});
  }
  const json& cj = mj.at("customers");
  if (!cj.is_array()) invalid("market.customers must be an array");
  for (std::size_t g = 0; g < cj.size(); ++g) {
    const std::string where = "market.customers[" + std::to_string(g) + "]";
    check_keys(cj[g], {"id", "phi", "epsilon", "alpha", "v"}, where);
    CustomerType c;
    c.id = get_or<std::string>(cj[g], "id", "gamma" + std::to_string(g + 1), where);
    c.phi = number(cj[g], "phi", 1.0, where);
    c.epsilon = number(cj[g], "epsilon", 1.0, where);
    if (!cj[g].contains("v")) invalid(where + " needs v");
    c.v = number_list(cj[g].at("v"), where + ".v");
    c.alpha = cj[g].contains("alpha") ? number_list(cj[g].at("alpha"), where + ".alpha")
                                      : std::vector<double>{1.0};
    // scalars broadcast over listing types
    if (c.v.size() == 1) c.v.assign(cfg.listings.size(), c.v.front());
    if (c.alpha.size() == 1) c.alpha.assign(cfg.listings.size(), c.alpha.front());
    cfg.customers.push_back(std::move(c));
  }
  cfg = validate_market(std::move(cfg));

  Intervention itv;
  if (!doc.contains("intervention")) invalid("intervention section is required");
  const json& ij = doc.at("intervention");
  check_keys(ij, {"lift", "v_treated", "alpha_treated"}, "intervention");
  if (ij.contains("lift") == ij.contains("v_treated")) {
    invalid("intervention needs exactly one of lift and v_treated");
  }
  if (ij.contains("lift")) {
    itv = Intervention::multiplicative(cfg, number(ij, "lift", 1.0, "intervention"));
  } else {
    itv.v_treated = matrix(ij.at("v_treated"), "intervention.v_treated");
  }
  if (ij.contains("alpha_treated")) {
    itv.alpha_treated = matrix(ij.at("alpha_treated"), "intervention.alpha_treated");
  }
  validate_intervention(cfg, itv);
  return {cfg, itv, {}, std::nullopt};
}

DesignSpec parse_design(const json& dj) {
  check_keys(dj, {"type", "a_c", "a_l", "assignment"}, "design");
  const auto type = get_or<std::string>(dj, "type", "gc", "design");
  if (type == "gc") return design::GlobalControl{};
  if (type == "gt") return design::GlobalTreatment{};
  if (type == "cr") return design::CustomerSide{number(dj, "a_c", 0.5, "design")};
  if (type == "lr") return design::ListingSide{number(dj, "a_l", 0.5, "design")};
  if (type == "tsr") {
    return design::TwoSided{number(dj, "a_c", 0.5, "design"), number(dj, "a_l", 0.5, "design")};
  }
  if (type == "cluster") {
    design::Cluster c;
    if (!dj.contains("assignment")) invalid("cluster design needs an assignment");
    try {
      c.assignment = dj.at("assignment").get<std::vector<int>>();
    } catch (const json::exception&) {
      invalid("design.assignment must be an array of 0/1");
    }
    return c;
  }
  invalid("unknown design type '" + type + "'");
}

void parse_sim(const json& sj, SweepSpec& spec) {
  check_keys(sj, {"n_listings", "t0", "t1", "consideration", "k", "initial_state", "scale_window"},
             "sim");
  spec.sim.n_listings = count(sj, "n_listings", spec.sim.n_listings, "sim");
  spec.sim.t0 = number(sj, "t0", spec.sim.t0, "sim");
  spec.sim.t1 = number(sj, "t1", spec.sim.t1, "sim");
  spec.scale_window = get_or<bool>(sj, "scale_window", spec.scale_window, "sim");
  const auto consideration = get_or<std::string>(sj, "consideration", "bernoulli", "sim");
  if (consideration == "bernoulli") {
    if (sj.contains("k")) invalid("sim.k only applies to fixed-k consideration");
    spec.sim.consideration = PerListingBernoulli{};
  } else if (consideration == "fixed-k") {
    spec.sim.consideration = FixedK{count(sj, "k", 50, "sim")};
  } else {
    invalid("sim.consideration must be bernoulli or fixed-k");
  }
  const auto init = get_or<std::string>(sj, "initial_state", "all-available", "sim");
  if (init == "all-available") {
    spec.sim.initial_state = InitialState::AllAvailable;
  } else if (init == "meanfield-gc") {
    spec.sim.initial_state = InitialState::MeanFieldGC;
  } else {
    invalid("sim.initial_state must be all-available or meanfield-gc");
  }
  if (!(spec.sim.t0 >= 0.0 && spec.sim.t1 > spec.sim.t0)) invalid("sim needs 0 <= t0 < t1");
  if (spec.sim.n_listings < 1) invalid("sim.n_listings must be positive");
  if (const auto* fk = std::get_if<FixedK>(&spec.sim.consideration); fk && fk->k < 1) {
    invalid("sim.k must be at least 1");
  }
}

void parse_analysis(const json& aj, SweepSpec& spec) {
  check_keys(aj, {"estimators", "reps", "bootstrap_b", "level", "seed", "threads", "a_c", "a_l",
                  "schedule"},
             "analysis");
  if (aj.contains("estimators")) {
    spec.estimators.clear();
    if (!aj.at("estimators").is_array()) invalid("analysis.estimators must be an array");
    for (const auto& e : aj.at("estimators")) {
      if (!e.is_string()) invalid("analysis.estimators must contain names");
      const auto id = parse_estimator(e.get<std::string>());
      if (!id) invalid("unknown estimator '" + e.get<std::string>() + "'");
      spec.estimators.push_back(*id);
    }
    if (spec.estimators.empty()) invalid("analysis.estimators is empty");
  }
  spec.reps = count(aj, "reps", spec.reps, "analysis");
  spec.bootstrap_b = count(aj, "bootstrap_b", spec.bootstrap_b, "analysis");
  spec.level = number(aj, "level", spec.level, "analysis");
  if (aj.contains("seed")) {
    if (!aj.at("seed").is_number_unsigned()) invalid("analysis.seed must be a non-negative integer");
    spec.seed = aj.at("seed").get<std::uint64_t>();
  }
  spec.threads = count(aj, "threads", spec.threads, "analysis");
  spec.settings.a_c = number(aj, "a_c", spec.settings.a_c, "analysis");
  spec.settings.a_l = number(aj, "a_l", spec.settings.a_l, "analysis");
  if (aj.contains("schedule")) {
    const json& sj = aj.at("schedule");
    check_keys(sj, {"a_bar_c", "a_bar_l", "c_exponent"}, "analysis.schedule");
    auto& s = spec.settings.schedule;
    s.a_bar_c = number(sj, "a_bar_c", s.a_bar_c, "analysis.schedule");
    s.a_bar_l = number(sj, "a_bar_l", s.a_bar_l, "analysis.schedule");
    s.c_exponent = number(sj, "c_exponent", s.c_exponent, "analysis.schedule");
    tsr_schedule(1.0, s);
  }
  const auto interior = [](double a) { return a > 0.0 && a < 1.0; };
  if (!interior(spec.settings.a_c) || !interior(spec.settings.a_l)) {
    invalid("analysis.a_c and analysis.a_l must lie in (0, 1)");
  }
  if (spec.reps < 2) invalid("analysis.reps must be at least 2");
  if (spec.bootstrap_b < 100) invalid("analysis.bootstrap_b must be at least 100");
  if (!(spec.level > 0.0 && spec.level < 1.0)) invalid("analysis.level must lie in (0, 1)");
  if (spec.threads < 1) invalid("analysis.threads must be at least 1");
}

void parse_sweep(const json& wj, SweepSpec& spec) {
  check_keys(wj, {"scenario", "values", "balance", "fixed_k", "cluster"}, "sweep");
  if (wj.contains("scenario")) {
    const auto name = get_or<std::string>(wj, "scenario", "", "sweep");
    const auto kind = parse_scenario(name);
    if (!kind) invalid("unknown sweep scenario '" + name + "'");
    spec.scenario = *kind;
  }
  if (wj.contains("values")) spec.values = number_list(wj.at("values"), "sweep.values");
  spec.balance = number(wj, "balance", spec.balance, "sweep");
  spec.fixed_k = count(wj, "fixed_k", spec.fixed_k, "sweep");
  if (wj.contains("cluster")) {
    spec.cluster = parse_cluster(wj.at("cluster"), spec.cluster, "sweep.cluster", false);
  }
  if (!(spec.balance > 0.0)) invalid("sweep.balance must be positive");
  for (double v : spec.values) {
    if (spec.scenario == ScenarioKind::ClusterPreferenceRatio ? !(v >= 0.0 && v <= 1.0) : !(v > 0.0)) {
      invalid("sweep.values out of range for the scenario");
    }
  }
}

RunConfig parse_document(const json& doc) {
  check_keys(doc, {"schema_version", "market", "intervention", "design", "sim", "sweep", "analysis"},
             "config");
  RunConfig rc;
  if (!doc.contains("schema_version") || !doc.at("schema_version").is_number_integer()) {
    invalid("schema_version is required");
  }
  rc.schema_version = doc.at("schema_version").get<int>();
  if (rc.schema_version != 1) invalid("unsupported schema_version");
  rc.experiment = parse_experiment(doc);
  if (doc.contains("design")) rc.design = parse_design(doc.at("design"));
  validate_design(rc.experiment.config, rc.design);
  if (doc.contains("sim")) parse_sim(doc.at("sim"), rc.analysis);
  if (doc.contains("analysis")) parse_analysis(doc.at("analysis"), rc.analysis);
  if (doc.contains("sweep")) parse_sweep(doc.at("sweep"), rc.analysis);
  return rc;
}

json homogeneous_market(double v, double lambda = 1.0, double alpha = 1.0) {
  return {{"lambda", lambda},
          {"tau", 1.0},
          {"customers", json::array({{{"id", "customer"}, {"phi", 1.0}, {"epsilon", 1.0},
                                      {"alpha", alpha}, {"v", v}}})},
          {"listings", json::array({{{"id", "listing"}, {"rho", 1.0}, {"nu", 1.0}}})}};
}

json point_preset(json market, json intervention) {
  return {{"schema_version", 1}, {"market", std::move(market)}, {"intervention", std::move(intervention)}};
}

json customer_het(double v1, double v2) {
  json m = homogeneous_market(0.0);
  m["customers"] = json::array({{{"id", "gamma1"}, {"phi", 0.5}, {"epsilon", 1.0}, {"v", v1}},
                                {{"id", "gamma2"}, {"phi", 0.5}, {"epsilon", 1.0}, {"v", v2}}});
  return point_preset(m, {{"lift", 1.25}});
}

json listing_het(double v1, double v2, double vt1, double vt2) {
  json m = homogeneous_market(0.0);
  m["customers"] = json::array({{{"id", "customer"}, {"phi", 1.0}, {"epsilon", 1.0}, {"v", json::array({v1, v2})}}});
  m["listings"] = json::array({{{"id", "theta1"}, {"rho", 0.5}, {"nu", 1.0}},
                               {{"id", "theta2"}, {"rho", 0.5}, {"nu", 1.0}}});
  return point_preset(m, {{"v_treated", json::array({json::array({vt1, vt2})})}});
}

json sweep_preset(const char* scenario, json extra = json::object()) {
  json doc = point_preset(homogeneous_market(0.315), {{"v_treated", json::array({json::array({0.3937})})}});
  json sweep = {{"scenario", scenario}};
  sweep.update(extra);
  doc["sweep"] = sweep;
  return doc;
}

const std::vector<std::pair<std::string, json>>& presets() {
  static const std::vector<std::pair<std::string, json>> table = [] {
    const json calib_itv = {{"v_treated", json::array({json::array({0.3937})})}};
    std::vector<std::pair<std::string, json>> t;
    t.emplace_back("calibration", point_preset(homogeneous_market(0.315), calib_itv));
    t.emplace_back("demand-proxy", point_preset(homogeneous_market(0.315, 1e-4), calib_itv));
    t.emplace_back("supply-proxy", point_preset(homogeneous_market(0.315, 1e4), calib_itv));
    t.emplace_back("low-utility", point_preset(homogeneous_market(0.155), {{"lift", 1.25}}));
    t.emplace_back("medium-utility", point_preset(homogeneous_market(0.315), {{"lift", 1.25}}));
    t.emplace_back("high-utility", point_preset(homogeneous_market(0.62), {{"lift", 1.25}}));
    t.emplace_back("customer-het-l", customer_het(0.17, 0.51));
    t.emplace_back("customer-het-h", customer_het(0.12, 0.46));
    t.emplace_back("listing-het-l", listing_het(0.25, 0.4, 0.3125, 0.5));
    t.emplace_back("listing-het-h", listing_het(0.1, 0.6, 0.125, 0.75));
    t.emplace_back("hte-multiplicative", listing_het(0.27, 0.351, 0.3375, 0.43875));
    t.emplace_back("hte-amp", listing_het(0.27, 0.351, 0.2727, 0.5265));
    t.emplace_back("hte-rev", listing_het(0.27, 0.351, 0.432, 0.355));
    {
      json fk = point_preset(homogeneous_market(6.0, 1.0, 0.01), {{"v_treated", json::array({json::array({7.5})})}});
      fk["sim"] = {{"consideration", "fixed-k"}, {"k", 50}};
      t.emplace_back("fixed-k50", fk);
    }
    t.emplace_back("cluster", json{{"schema_version", 1},
                                   {"market", {{"cluster", {{"x", 0.5}, {"y", 0.25}, {"delta", 1.3}}}}},
                                   {"analysis", {{"estimators", json::array({"cluster", "tsri2"})}}}});
    t.emplace_back("vary-balance", sweep_preset("vary-balance", {{"values", {0.1, 1.0, 10.0}}}));
    t.emplace_back("vary-avg-utility", sweep_preset("vary-avg-utility"));
    t.emplace_back("vary-customer-het", sweep_preset("vary-customer-het"));
    t.emplace_back("vary-listing-het", sweep_preset("vary-listing-het"));
    t.emplace_back("vary-hte", sweep_preset("vary-hte"));
    {
      json fk = sweep_preset("fixed-k", {{"fixed_k", 50}});
      t.emplace_back("vary-fixed-k", fk);
    }
    {
      json cg = sweep_preset("cluster-preference-ratio",
                             {{"values", {0.0, 0.25, 0.5, 0.75, 1.0}},
                              {"cluster", {{"x", 0.5}, {"delta", 1.3}}}});
      cg["analysis"] = {{"estimators", json::array({"cluster", "tsri2"})}};
      t.emplace_back("cluster-grid", cg);
    }
    return t;
  }();
  return table;
}

}  // namespace

RunConfig parse_config(std::string_view json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::exception& ex) {
    invalid(std::string("malformed JSON: ") + ex.what());
  }
  try {
    return parse_document(doc);
  } catch (const json::exception& ex) {
    invalid(std::string("bad config: ") + ex.what());
  }
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) invalid("cannot read config file " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::vector<std::string> preset_names() {
  std::vector<std::string> names;
  for (const auto& [name, doc] : presets()) names.push_back(name);
  return names;
}

std::string preset_text(std::string_view name) {
  for (const auto& [key, doc] : presets()) {
    if (key == name) return doc.dump(2);
  }
  invalid("unknown preset '" + std::string(name) + "'");
}

RunConfig preset_config(std::string_view name) { return parse_config(preset_text(name)); }

}  // namespace marketlab
