#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "marketlab/ledger.hpp"
#include "marketlab/market_model.hpp"

namespace marketlab {

struct Trajectory {
  std::vector<double> times;
  std::vector<StateVector> states;

  const StateVector& terminal() const { return states.back(); }
};

struct SteadyState {
  StateVector s_star;
  double residual_norm = 0.0;
  std::size_t solver_iterations = 0;
  bool used_fallback = false;
};

/// Integrator settings. `step <= 0` selects the default fixed step
/// min(0.01, 0.1 / (tau max nu), 0.1 / (lambda max(1, max alpha v / epsilon))).
struct StepControls {
  double step = 0.0;
  std::size_t record_stride = 1;  ///< keep every k-th step in the Trajectory
};

double default_step(const ExpandedMarket& m);

/// Right-hand side of the mean-field ODE per listing cell:
/// (rho - s) tau nu - lambda sum_k phi_k p_k(c | s).
Eigen::VectorXd ode_rhs(const StateVector& s, const ExpandedMarket& m);

/// Identical to ode_rhs; the steady state is its zero.
Eigen::VectorXd flow_residual(const StateVector& s, const ExpandedMarket& m);

/// Booking flow lambda sum_k phi_k p_k(c | s) into each listing cell.
Eigen::VectorXd booking_flow(const StateVector& s, const ExpandedMarket& m);

/// Instantaneous Q_ij = lambda sum_theta sum_gamma phi_{gamma,i} p_{gamma,i}(theta, j | s).
std::array<double, 4> booking_rates_at(const StateVector& s, const ExpandedMarket& m);

using StepObserver = std::function<void(double t, const StateVector& s)>;

/// Classical RK4 from s0 over [0, horizon]. The observer, if any, sees every
/// step (including t = 0); the returned trajectory keeps every
/// `record_stride`-th step plus the terminal state.
Trajectory integrate(const StateVector& s0, const ExpandedMarket& m, double horizon,
                     const StepControls& controls = {},
                     const StepObserver& observer = {});

/// Unique interior steady state. Damped Newton on the gradient of the strictly
/// convex V(y) = W(exp(y)); falls back to damped fixed-point sweeps.
SteadyState steady_state(const ExpandedMarket& m, double tol = 1e-10);

/// The Lyapunov function W(s). Requires s > 0 on every positive-mass cell.
double lyapunov_value(const StateVector& s, const ExpandedMarket& m);

struct SteadyWindow {};
struct TransientWindow {
  double t0 = 0.0;
  double t1 = 1.0;
  StateVector s0;  ///< empty means full availability (s0 = rho)
  StepControls controls;
};

BookingLedger booking_rates_mf(const ExpandedMarket& m, const SteadyWindow& = {});
BookingLedger booking_rates_mf(const ExpandedMarket& m, const TransientWindow& window);

}  // namespace marketlab
