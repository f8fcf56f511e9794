#include "marketlab/ledger.hpp"

namespace marketlab {

std::vector<std::size_t> BookingLedger::sparse_cells(std::uint64_t threshold) const {
  std::vector<std::size_t> out;
  if (source != Source::Simulation) return out;
  for (std::size_t c = 0; c < 4; ++c) {
    if (counts[c] < threshold) out.push_back(c);
  }
  return out;
}

BookingLedger BookingLedger::from_rates(double q00, double q01, double q10, double q11) {
  BookingLedger ledger;
  ledger.rates = {q00, q01, q10, q11};
  return ledger;
}

}  // namespace marketlab
