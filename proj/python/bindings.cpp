#include <algorithm>
#include <sstream>

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "commands.hpp"
#include "marketlab/analysis_harness.hpp"
#include "marketlab/asymptotics.hpp"
#include "marketlab/config.hpp"
#include "marketlab/designs.hpp"
#include "marketlab/errors.hpp"
#include "marketlab/estimators.hpp"
#include "marketlab/mean_field.hpp"

namespace py = pybind11;
using namespace marketlab;

namespace {

RunConfig config_from(const std::string& text_or_preset) {
  const auto names = preset_names();
  if (std::find(names.begin(), names.end(), text_or_preset) != names.end()) {
    return preset_config(text_or_preset);
  }
  return parse_config(text_or_preset);
}

py::dict rates_dict(const BookingLedger& L) {
  py::dict d;
  d["q00"] = L.q(0, 0);
  d["q01"] = L.q(0, 1);
  d["q10"] = L.q(1, 0);
  d["q11"] = L.q(1, 1);
  return d;
}

}  // namespace

PYBIND11_MODULE(_marketlab, m) {
  m.doc() = "Mean-field and finite-N marketplace experiment engine";

  py::register_exception<MarketError>(m, "MarketError", PyExc_ValueError);

  m.def("preset_names", &preset_names);
  m.def("preset_text", [](const std::string& name) { return preset_text(name); });

  m.def(
      "steady_state",
      [](const std::string& config) {
        const RunConfig rc = config_from(config);
        const auto& e = rc.experiment;
        const ExpandedMarket mk = expand_for_design(e.config, e.intervention, rc.design, e.validation);
        const SteadyState ss = steady_state(mk);
        py::dict out;
        out["s_star"] = std::vector<double>(ss.s_star.data(), ss.s_star.data() + ss.s_star.size());
        out["residual_norm"] = ss.residual_norm;
        out["rates"] = rates_dict(booking_rates_mf(mk));
        return out;
      },
      py::arg("config"), "Steady state of a config document or preset name under its design.");

  m.def(
      "gte_true",
      [](const std::string& config) {
        const RunConfig rc = config_from(config);
        return gte_true(rc.experiment.config, rc.experiment.intervention, rc.experiment.validation);
      },
      py::arg("config"));

  m.def(
      "meanfield_estimates",
      [](const std::string& config) {
        const RunConfig rc = config_from(config);
        const GteReport r = mean_field_estimates(rc.experiment, rc.analysis.estimators,
                                                 rc.analysis.settings);
        py::dict est;
        for (const auto& [id, v] : r.estimates) est[py::str(id.name())] = v;
        py::dict out;
        out["gte"] = r.gte_true;
        out["estimates"] = est;
        return out;
      },
      py::arg("config"));

  m.def(
      "simulate",
      [](const std::string& config, std::size_t n_listings, std::uint64_t seed) {
        const RunConfig rc = config_from(config);
        const auto& e = rc.experiment;
        const ExpandedMarket mk = expand_for_design(e.config, e.intervention, rc.design, e.validation);
        SimConfig sc = rc.analysis.sim;
        sc.n_listings = n_listings;
        sc.seed = seed;
        SimulationResult r;
        {
          py::gil_scoped_release release;
          r = simulate(mk, sc);
        }
        py::dict out = rates_dict(r.ledger);
        out["counts"] = std::vector<std::uint64_t>(r.ledger.counts.begin(), r.ledger.counts.end());
        return out;
      },
      py::arg("config"), py::arg("n_listings") = 5000, py::arg("seed") = 0);

  m.def("tsr_schedule", [](double balance, double a_bar_c, double a_bar_l, double c) {
    const auto f = tsr_schedule(balance, {a_bar_c, a_bar_l, c});
    return std::make_pair(f.a_c, f.a_l);
  }, py::arg("balance"), py::arg("a_bar_c") = 0.5, py::arg("a_bar_l") = 0.5, py::arg("c") = 1.0);
  m.def("beta_weight", &beta_weight, py::arg("balance"), py::arg("c") = 1.0);

  auto ledger = [](const std::vector<double>& q) {
    if (q.size() != 4) throw MarketError(ErrorKind::InvalidConfig, "expected [q00, q01, q10, q11]");
    return BookingLedger::from_rates(q[0], q[1], q[2], q[3]);
  };
  m.def("est_cr", [ledger](const std::vector<double>& q, double a_c) { return est_cr(ledger(q), a_c); });
  m.def("est_lr", [ledger](const std::vector<double>& q, double a_l) { return est_lr(ledger(q), a_l); });
  m.def("est_tsrn", [ledger](const std::vector<double>& q, double a_c, double a_l) {
    return est_tsrn(ledger(q), a_c, a_l);
  });
  m.def("est_tsri", [ledger](const std::vector<double>& q, double a_c, double a_l, double beta,
                             double k) { return est_tsri(ledger(q), a_c, a_l, beta, k); });
  m.def("est_cluster", [ledger](const std::vector<double>& q, double z) {
    return est_cluster(ledger(q), z);
  });

  m.def("homogeneous_limits", [](double v, double vt, double eps, double rho, double a_c,
                                 double a_l, const std::string& regime) {
    if (regime != "demand" && regime != "supply") {
      throw MarketError(ErrorKind::InvalidConfig, "regime must be 'demand' or 'supply'");
    }
    const LimitTable t = homogeneous_limits(
        v, vt, eps, rho, a_c, a_l, regime == "supply" ? Regime::SupplyLimit : Regime::DemandLimit);
    py::dict out;
    out["q"] = std::vector<double>(t.q_over_scale.begin(), t.q_over_scale.end());
    out["gte"] = t.gte_over_scale;
    return out;
  });

  m.def("two_listing_forms", [](double v, double vt, double eps, double lambda, double tau,
                                double a_c) {
    const auto f = two_listing_forms(v, vt, eps, lambda, tau, a_c);
    py::dict out;
    out["gte"] = f.gte;
    out["cr_estimate"] = f.cr_estimate;
    out["lr_estimate"] = f.lr_estimate;
    out["zeta"] = f.zeta;
    out["eta"] = f.eta;
    return out;
  });

  m.def(
      "run_cli",
      [](const std::vector<std::string>& args) {
        std::ostringstream out, err;
        int code = 0;
        {
          py::gil_scoped_release release;
          code = cli::run_cli(args, out, err);
        }
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("args"), "Runs the command-line tool in-process; returns (exit code, stdout, stderr).");
}
