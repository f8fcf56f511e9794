#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <vector>

namespace marketlab {

/// Booking rates Q_ij, i = customer condition, j = listing condition.
///
/// Mean-field ledgers carry rates only. Finite ledgers also carry the raw
/// booking counts of the window, and their rates are counts / ((T1 - T0) N)
/// so the two are on the same per-unit-listing-mass scale.
struct BookingLedger {
  enum class Source { MeanField, Simulation, Synthetic };

  std::array<double, 4> rates{};  ///< index 2*i + j
  std::array<std::uint64_t, 4> counts{};
  double t0 = 0.0;
  double t1 = 0.0;
  std::size_t n_listings = 0;  ///< 0 for mean-field ledgers
  Source source = Source::Synthetic;

  double q(int i, int j) const { return rates[static_cast<std::size_t>(2 * i + j)]; }
  double& q(int i, int j) { return rates[static_cast<std::size_t>(2 * i + j)]; }

  double total() const { return rates[0] + rates[1] + rates[2] + rates[3]; }

  /// Cells of a finite ledger holding fewer than `threshold` bookings.
  std::vector<std::size_t> sparse_cells(std::uint64_t threshold = 10) const;

  /// Ledger from explicit rates (tests, external data).
  static BookingLedger from_rates(double q00, double q01, double q10, double q11);
};

}  // namespace marketlab
