#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include "marketlab/ledger.hpp"
#include "marketlab/market_model.hpp"
#include "marketlab/rng.hpp"

namespace marketlab {

struct PerListingBernoulli {};
struct FixedK {
  std::size_t k = 50;
};
using Consideration = std::variant<PerListingBernoulli, FixedK>;

enum class InitialState { AllAvailable, MeanFieldGC };

struct SimConfig {
  std::size_t n_listings = 5000;
  double t0 = 5.0;   ///< burn-in end; bookings before t0 are not counted
  double t1 = 25.0;  ///< horizon
  std::uint64_t seed = 0;
  Consideration consideration = PerListingBernoulli{};
  InitialState initial_state = InitialState::AllAvailable;
  double trace_interval = 0.0;  ///< > 0 samples availability on this grid
  bool record_events = false;
};

/// Listing counts m(theta, j) and available counts per expanded listing cell.
struct FiniteState {
  std::vector<std::int64_t> totals;
  std::vector<std::int64_t> available;
};

struct AvailabilityTrace {
  std::vector<double> times;
  std::vector<Eigen::VectorXd> availability;  ///< available / N per cell
};

struct BookingEvent {
  double time;
  int i;
  int j;
  std::size_t theta;
};

struct SimulationResult {
  BookingLedger ledger;
  AvailabilityTrace trace;
  std::vector<BookingEvent> events;
};

/// Largest-remainder apportionment of N listings over the positive-mass
/// cells; ties go to the earlier cell.
std::vector<std::int64_t> apportion_listings(const ExpandedMarket& m, std::size_t n);

/// One multinomial logit draw over consideration counts.
///
/// Cell c is booked with probability D_c v_c / (epsilon_n + sum D v); returns
/// nullopt for the outside option.
std::optional<std::size_t> mnl_draw(std::span<const std::int64_t> considered,
                                    std::span<const double> utility, double epsilon_n,
                                    Philox4x32& rng);

/// Exact event-driven simulation of the finite-N booking chain.
SimulationResult simulate(const ExpandedMarket& m, const SimConfig& sc);

}  // namespace marketlab
