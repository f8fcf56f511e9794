#include "marketlab/mean_field.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "marketlab/errors.hpp"

namespace marketlab {

namespace {

constexpr double kBoundsSlack = 1e-9;
constexpr double kMinBalance = 1e-12;
constexpr double kMaxBalance = 1e12;
constexpr std::size_t kNewtonIterations = 200;
constexpr std::size_t kFixedPointSweeps = 10000;

/// Per-customer-cell quantities shared by the flow, W and its derivatives.
struct ChoiceTerms {
  Eigen::MatrixXd p;        ///< customer cell x listing cell choice probabilities
  Eigen::VectorXd denom;    ///< epsilon + sum w s per customer cell
};

ChoiceTerms choice_terms(const StateVector& s, const ExpandedMarket& m) {
  ChoiceTerms out;
  const Eigen::MatrixXd w = m.weights();
  out.p = w.array().rowwise() * s.transpose().array();
  out.denom = m.epsilon + out.p.rowwise().sum();
  out.p.array().colwise() /= out.denom.array();
  return out;
}

Eigen::VectorXd flow_unchecked(const StateVector& s, const ExpandedMarket& m) {
  const ChoiceTerms terms = choice_terms(s, m);
  return m.lambda * (terms.p.transpose() * m.phi);
}

Eigen::VectorXd rhs_unchecked(const StateVector& s, const ExpandedMarket& m) {
  return (m.rho - s).cwiseProduct(m.nu) * m.tau - flow_unchecked(s, m);
}

std::vector<Eigen::Index> active_cells(const ExpandedMarket& m) {
  std::vector<Eigen::Index> cells;
  for (Eigen::Index c = 0; c < m.rho.size(); ++c) {
    if (m.rho(c) > 0.0) cells.push_back(c);
  }
  return cells;
}

double max_abs(const Eigen::VectorXd& x) {
  return x.size() == 0 ? 0.0 : x.cwiseAbs().maxCoeff();
}

/// V(y) = W(exp(y)) restricted to the active cells.
class ConvexObjective {
 public:
  ConvexObjective(const ExpandedMarket& m, std::vector<Eigen::Index> cells)
      : m_(m), cells_(std::move(cells)) {}

  std::size_t dim() const { return cells_.size(); }

  StateVector state(const Eigen::VectorXd& y) const {
    StateVector s = StateVector::Zero(m_.rho.size());
    for (std::size_t a = 0; a < cells_.size(); ++a) {
      s(cells_[a]) = std::exp(y(static_cast<Eigen::Index>(a)));
    }
    return s;
  }

  double value(const Eigen::VectorXd& y) const {
    const StateVector s = state(y);
    return lyapunov_value(s, m_);
  }

  /// Flow residual on active cells (equals minus the gradient of V).
  Eigen::VectorXd residual(const Eigen::VectorXd& y) const {
    const Eigen::VectorXd f = rhs_unchecked(state(y), m_);
    Eigen::VectorXd out(static_cast<Eigen::Index>(cells_.size()));
    for (std::size_t a = 0; a < cells_.size(); ++a) out(static_cast<Eigen::Index>(a)) = f(cells_[a]);
    return out;
  }

  Eigen::MatrixXd hessian(const Eigen::VectorXd& y) const {
    const StateVector s = state(y);
    const ChoiceTerms terms = choice_terms(s, m_);
    const auto n = static_cast<Eigen::Index>(cells_.size());
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index a = 0; a < n; ++a) {
      const auto c = cells_[static_cast<std::size_t>(a)];
      h(a, a) += m_.tau * m_.nu(c) * s(c);
    }
    for (Eigen::Index k = 0; k < m_.phi.size(); ++k) {
      const double weight = m_.lambda * m_.phi(k);
      if (weight == 0.0) continue;
      for (Eigen::Index a = 0; a < n; ++a) {
        const double pa = terms.p(k, cells_[static_cast<std::size_t>(a)]);
        h(a, a) += weight * pa;
        for (Eigen::Index b = 0; b < n; ++b) {
          h(a, b) -= weight * pa * terms.p(k, cells_[static_cast<std::size_t>(b)]);
        }
      }
    }
    return h;
  }

  Eigen::VectorXd upper_bound() const {
    Eigen::VectorXd ub(static_cast<Eigen::Index>(cells_.size()));
    for (std::size_t a = 0; a < cells_.size(); ++a) ub(static_cast<Eigen::Index>(a)) = std::log(m_.rho(cells_[a]));
    return ub;
  }

 private:
  const ExpandedMarket& m_;
  std::vector<Eigen::Index> cells_;
};

/// Starting point from the linearized balance (rho - s) tau nu = lambda sum phi g s,
/// exact to first order in both balance limits.
StateVector initial_guess(const ExpandedMarket& m) {
  const Eigen::MatrixXd g = m.weights().array().colwise() / m.epsilon.array();
  const Eigen::VectorXd demand = m.lambda * (g.transpose() * m.phi);
  StateVector s(m.rho.size());
  for (Eigen::Index c = 0; c < s.size(); ++c) {
    const double supply = m.tau * m.nu(c);
    s(c) = m.rho(c) * supply / (supply + demand(c));
  }
  return s;
}

}  // namespace

double default_step(const ExpandedMarket& m) {
  double h = 0.01;
  const double max_nu = m.nu.size() ? m.nu.maxCoeff() : 0.0;
  if (m.tau * max_nu > 0.0) h = std::min(h, 0.1 / (m.tau * max_nu));
  if (m.lambda > 0.0) {
    double gmax = 1.0;
    const Eigen::MatrixXd w = m.weights();
    for (Eigen::Index k = 0; k < w.rows(); ++k) {
      if (m.phi(k) > 0.0) gmax = std::max(gmax, w.row(k).maxCoeff() / m.epsilon(k));
    }
    h = std::min(h, 0.1 / (m.lambda * gmax));
  }
  return h;
}

Eigen::VectorXd ode_rhs(const StateVector& s, const ExpandedMarket& m) {
  check_state_bounds(s, m);
  return rhs_unchecked(s, m);
}

Eigen::VectorXd flow_residual(const StateVector& s, const ExpandedMarket& m) {
  return ode_rhs(s, m);
}

Eigen::VectorXd booking_flow(const StateVector& s, const ExpandedMarket& m) {
  check_state_bounds(s, m);
  return flow_unchecked(s, m);
}

std::array<double, 4> booking_rates_at(const StateVector& s, const ExpandedMarket& m) {
  const ChoiceTerms terms = choice_terms(s, m);
  std::array<double, 4> q{};
  for (std::size_t gamma = 0; gamma < m.num_customer_types; ++gamma) {
    for (int i = 0; i < 2; ++i) {
      const auto k = static_cast<Eigen::Index>(ExpandedMarket::customer_cell(gamma, i));
      if (m.phi(k) == 0.0) continue;
      for (std::size_t theta = 0; theta < m.num_listing_types; ++theta) {
        for (int j = 0; j < 2; ++j) {
          const auto c = static_cast<Eigen::Index>(ExpandedMarket::listing_cell(theta, j));
          q[static_cast<std::size_t>(2 * i + j)] += m.lambda * m.phi(k) * terms.p(k, c);
        }
      }
    }
  }
  return q;
}

Trajectory integrate(const StateVector& s0, const ExpandedMarket& m, double horizon,
                     const StepControls& controls, const StepObserver& observer) {
  check_state_bounds(s0, m);
  if (!(horizon > 0.0)) {
    throw MarketError(ErrorKind::DomainError, "integration horizon must be positive");
  }
  const double h_max = controls.step > 0.0 ? controls.step : default_step(m);
  if (!(h_max >= 1e-12)) {
    throw MarketError(ErrorKind::StepSizeUnderflow, "step size below 1e-12 for this market");
  }
  const auto steps = static_cast<std::size_t>(std::ceil(horizon / h_max - 1e-9));
  const double h = horizon / static_cast<double>(std::max<std::size_t>(steps, 1));
  const std::size_t stride = std::max<std::size_t>(controls.record_stride, 1);

  Trajectory traj;
  StateVector s = s0;
  traj.times.push_back(0.0);
  traj.states.push_back(s);
  if (observer) observer(0.0, s);

  for (std::size_t n = 1; n <= steps; ++n) {
    const Eigen::VectorXd k1 = rhs_unchecked(s, m);
    const Eigen::VectorXd k2 = rhs_unchecked(s + 0.5 * h * k1, m);
    const Eigen::VectorXd k3 = rhs_unchecked(s + 0.5 * h * k2, m);
    const Eigen::VectorXd k4 = rhs_unchecked(s + h * k3, m);
    s += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    for (Eigen::Index c = 0; c < s.size(); ++c) {
      if (s(c) < -kBoundsSlack || s(c) > m.rho(c) + kBoundsSlack) {
        std::ostringstream os;
        os << "integration left the state space at t = " << n * h;
        throw MarketError(ErrorKind::StateOutOfBounds, os.str());
      }
      s(c) = std::clamp(s(c), 0.0, m.rho(c));
    }
    const double t = (n == steps) ? horizon : static_cast<double>(n) * h;
    if (observer) observer(t, s);
    if (n % stride == 0 || n == steps) {
      traj.times.push_back(t);
      traj.states.push_back(s);
    }
  }
  return traj;
}

double lyapunov_value(const StateVector& s, const ExpandedMarket& m) {
  double w = 0.0;
  for (Eigen::Index c = 0; c < s.size(); ++c) {
    if (m.rho(c) == 0.0) continue;
    if (!(s(c) > 0.0)) {
      throw MarketError(ErrorKind::DomainError, "W is undefined when a positive-mass cell has s = 0");
    }
    const double supply = m.tau * m.nu(c);
    w += -supply * m.rho(c) * std::log(s(c)) + supply * s(c);
  }
  const Eigen::VectorXd denom = m.epsilon + m.weights() * s;
  for (Eigen::Index k = 0; k < m.phi.size(); ++k) {
    if (m.phi(k) > 0.0) w += m.lambda * m.phi(k) * std::log(denom(k));
  }
  return w;
}

SteadyState steady_state(const ExpandedMarket& market, double tol) {
  if (!(tol > 0.0)) throw MarketError(ErrorKind::DomainError, "tolerance must be positive");

  ExpandedMarket m = market;
  m.lambda = std::clamp(m.lambda, kMinBalance * m.tau, kMaxBalance * m.tau);

  const auto cells = active_cells(m);
  const ConvexObjective objective(m, cells);
  const auto n = static_cast<Eigen::Index>(cells.size());

  const StateVector guess = initial_guess(m);
  Eigen::VectorXd y(n);
  for (Eigen::Index a = 0; a < n; ++a) y(a) = std::log(guess(cells[static_cast<std::size_t>(a)]));
  const Eigen::VectorXd y_max = objective.upper_bound();

  SteadyState out;
  Eigen::VectorXd f = objective.residual(y);
  double value = objective.value(y);
  std::size_t it = 0;
  for (; it < kNewtonIterations && max_abs(f) > tol; ++it) {
    const Eigen::MatrixXd h = objective.hessian(y);
    // gradient of V is -f
    const Eigen::VectorXd step = h.ldlt().solve(f);
    if (!step.allFinite()) break;

    double t = 1.0;
    for (Eigen::Index a = 0; a < n; ++a) {
      if (step(a) > 0.0) t = std::min(t, (y_max(a) - y(a)) / step(a));
    }
    t = std::max(t, 0.0);
    const double slope = -f.dot(step);
    bool accepted = false;
    while (t > 1e-14) {
      const Eigen::VectorXd trial = (y + t * step).cwiseMin(y_max);
      const Eigen::VectorXd f_trial = objective.residual(trial);
      const double v_trial = objective.value(trial);
      if (v_trial <= value + 1e-4 * t * slope || max_abs(f_trial) < (1.0 - 1e-4 * t) * max_abs(f)) {
        y = trial;
        f = f_trial;
        value = v_trial;
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    if (!accepted) break;
  }
  out.solver_iterations = it;
  out.s_star = objective.state(y);

  if (max_abs(f) > tol) {
    // Damped fixed-point sweeps s <- rho - flow / (tau nu).
    out.used_fallback = true;
    StateVector s = out.s_star;
    for (std::size_t sweep = 0; sweep < kFixedPointSweeps; ++sweep) {
      const Eigen::VectorXd flow = flow_unchecked(s, m);
      StateVector target = m.rho - flow.cwiseQuotient(m.tau * m.nu);
      for (const auto c : cells) target(c) = std::clamp(target(c), 1e-300, m.rho(c));
      s = 0.5 * s + 0.5 * target;
      ++out.solver_iterations;
      if (max_abs(rhs_unchecked(s, m)) <= tol) break;
    }
    out.s_star = s;
  }
  out.residual_norm = max_abs(rhs_unchecked(out.s_star, m));
  if (!(out.residual_norm <= tol)) {
    std::ostringstream os;
    os << "steady-state residual " << out.residual_norm << " above tolerance " << tol;
    throw MarketError(ErrorKind::NoConvergence, os.str());
  }
  return out;
}

BookingLedger booking_rates_mf(const ExpandedMarket& m, const SteadyWindow&) {
  const SteadyState ss = steady_state(m);
  BookingLedger ledger;
  ledger.rates = booking_rates_at(ss.s_star, m);
  ledger.source = BookingLedger::Source::MeanField;
  ledger.t0 = 0.0;
  ledger.t1 = std::numeric_limits<double>::infinity();
  return ledger;
}

BookingLedger booking_rates_mf(const ExpandedMarket& m, const TransientWindow& window) {
  if (!(window.t0 >= 0.0 && window.t1 > window.t0)) {
    throw MarketError(ErrorKind::DomainError, "transient window needs 0 <= T0 < T1");
  }
  StateVector s = window.s0.size() ? window.s0 : StateVector(m.rho);
  if (window.t0 > 0.0) s = integrate(s, m, window.t0, window.controls).terminal();

  std::array<double, 4> integral{};
  std::array<double, 4> previous{};
  double previous_t = 0.0;
  bool first = true;
  StepControls controls = window.controls;
  controls.record_stride = std::numeric_limits<std::size_t>::max();
  integrate(s, m, window.t1 - window.t0, controls, [&](double t, const StateVector& state) {
    const auto q = booking_rates_at(state, m);
    if (!first) {
      for (std::size_t c = 0; c < 4; ++c) integral[c] += 0.5 * (t - previous_t) * (q[c] + previous[c]);
    }
    first = false;
    previous = q;
    previous_t = t;
  });

  BookingLedger ledger;
  for (std::size_t c = 0; c < 4; ++c) ledger.rates[c] = integral[c] / (window.t1 - window.t0);
  ledger.source = BookingLedger::Source::MeanField;
  ledger.t0 = window.t0;
  ledger.t1 = window.t1;
  return ledger;
}

}  // namespace marketlab
