#include "marketlab/finite_sim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "marketlab/errors.hpp"
#include "marketlab/mean_field.hpp"

namespace marketlab {

namespace {

std::int64_t draw_binomial(std::int64_t n, double p, Philox4x32& rng) {
  if (n <= 0 || p <= 0.0) return 0;
  if (p >= 1.0) return n;
  std::binomial_distribution<std::int64_t> dist(n, p);
  return dist(rng);
}

/// Uniform sample of k listings without replacement from the available pool,
/// reported as counts per cell. Everything is considered when fewer than k
/// listings are available.
void draw_fixed_k(std::span<const std::int64_t> available, std::size_t k,
                  std::vector<std::int64_t>& considered, Philox4x32& rng) {
  std::int64_t pool = std::accumulate(available.begin(), available.end(), std::int64_t{0});
  std::copy(available.begin(), available.end(), considered.begin());
  if (pool <= static_cast<std::int64_t>(k)) return;

  std::vector<std::int64_t> remaining(available.begin(), available.end());
  std::fill(considered.begin(), considered.end(), 0);
  for (std::size_t draw = 0; draw < k; ++draw) {
    auto u = static_cast<std::int64_t>(rng.uniform() * static_cast<double>(pool));
    u = std::min(u, pool - 1);
    for (std::size_t c = 0; c < remaining.size(); ++c) {
      if (u < remaining[c]) {
        --remaining[c];
        ++considered[c];
        break;
      }
      u -= remaining[c];
    }
    --pool;
  }
}

std::size_t draw_categorical(std::span<const double> cumulative, double total, Philox4x32& rng) {
  const double u = rng.uniform() * total;
  const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
  const auto idx = static_cast<std::size_t>(std::distance(cumulative.begin(), it));
  return std::min(idx, cumulative.size() - 1);
}

}  // namespace

std::vector<std::int64_t> apportion_listings(const ExpandedMarket& m, std::size_t n) {
  const auto cells = static_cast<std::size_t>(m.rho.size());
  std::size_t positive = 0;
  for (std::size_t c = 0; c < cells; ++c) positive += m.rho(static_cast<Eigen::Index>(c)) > 0.0;
  if (n < positive) {
    throw MarketError(ErrorKind::NTooSmall, "N is smaller than the number of positive-mass cells");
  }

  std::vector<std::int64_t> totals(cells, 0);
  std::vector<double> remainder(cells, -1.0);
  std::int64_t assigned = 0;
  const double rho_sum = m.rho.sum();
  for (std::size_t c = 0; c < cells; ++c) {
    const double share = m.rho(static_cast<Eigen::Index>(c)) / rho_sum;
    if (share <= 0.0) continue;
    const double exact = share * static_cast<double>(n);
    totals[c] = static_cast<std::int64_t>(std::floor(exact + 1e-9));
    remainder[c] = std::max(0.0, exact - static_cast<double>(totals[c]));
    assigned += totals[c];
  }
  std::vector<std::size_t> order(cells);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return remainder[a] > remainder[b]; });
  auto left = static_cast<std::int64_t>(n) - assigned;
  for (std::size_t r = 0; left > 0; r = (r + 1) % cells) {
    if (remainder[order[r]] < 0.0) continue;
    ++totals[order[r]];
    --left;
  }
  return totals;
}

std::optional<std::size_t> mnl_draw(std::span<const std::int64_t> considered,
                                    std::span<const double> utility, double epsilon_n,
                                    Philox4x32& rng) {
  double mass = 0.0;
  for (std::size_t c = 0; c < considered.size(); ++c) {
    mass += static_cast<double>(considered[c]) * utility[c];
  }
  if (mass <= 0.0) return std::nullopt;
  double u = rng.uniform() * (epsilon_n + mass);
  for (std::size_t c = 0; c < considered.size(); ++c) {
    const double w = static_cast<double>(considered[c]) * utility[c];
    if (w <= 0.0) continue;
    if (u < w) return c;
    u -= w;
  }
  return std::nullopt;
}

SimulationResult simulate(const ExpandedMarket& m, const SimConfig& sc) {
  if (!(sc.t0 >= 0.0 && sc.t1 > sc.t0)) {
    throw MarketError(ErrorKind::InvalidConfig, "simulation window needs 0 <= T0 < T1");
  }
  if (const auto* fk = std::get_if<FixedK>(&sc.consideration); fk && fk->k < 1) {
    throw MarketError(ErrorKind::InvalidConfig, "fixed consideration size K must be at least 1");
  }

  const std::size_t cells = static_cast<std::size_t>(m.rho.size());
  const std::size_t customer_cells = static_cast<std::size_t>(m.phi.size());
  const auto n_listings = static_cast<double>(sc.n_listings);

  FiniteState state;
  state.totals = apportion_listings(m, sc.n_listings);
  state.available = state.totals;
  if (sc.initial_state == InitialState::MeanFieldGC) {
    const SteadyState gc = steady_state(m.control_only());
    for (std::size_t c = 0; c < cells; ++c) {
      const auto ci = static_cast<Eigen::Index>(c);
      if (m.rho(ci) <= 0.0) continue;
      const double fraction = gc.s_star(ci) / m.rho(ci);
      state.available[c] = std::clamp<std::int64_t>(
          std::llround(fraction * static_cast<double>(state.totals[c])), 0, state.totals[c]);
    }
  }

  Philox4x32 rng(sc.seed);

  std::vector<double> customer_cumulative(customer_cells);
  std::partial_sum(m.phi.data(), m.phi.data() + customer_cells, customer_cumulative.begin());
  const double arrival_rate = m.lambda * n_listings;

  std::vector<double> replenish_rate(cells);
  for (std::size_t c = 0; c < cells; ++c) replenish_rate[c] = m.tau * m.nu(static_cast<Eigen::Index>(c));

  // row-major copies of the per-customer-cell choice parameters
  std::vector<std::vector<double>> utility(customer_cells, std::vector<double>(cells));
  std::vector<std::vector<double>> consider(customer_cells, std::vector<double>(cells));
  for (std::size_t k = 0; k < customer_cells; ++k) {
    for (std::size_t c = 0; c < cells; ++c) {
      utility[k][c] = m.v(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(c));
      consider[k][c] = m.alpha(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(c));
    }
  }

  SimulationResult result;
  auto& ledger = result.ledger;
  ledger.source = BookingLedger::Source::Simulation;
  ledger.t0 = sc.t0;
  ledger.t1 = sc.t1;
  ledger.n_listings = sc.n_listings;

  auto snapshot = [&]() {
    Eigen::VectorXd y(static_cast<Eigen::Index>(cells));
    for (std::size_t c = 0; c < cells; ++c) {
      y(static_cast<Eigen::Index>(c)) = static_cast<double>(state.available[c]) / n_listings;
    }
    return y;
  };
  std::size_t next_sample = 0;
  auto record_until = [&](double t) {
    if (!(sc.trace_interval > 0.0)) return;
    while (true) {
      const double ts = static_cast<double>(next_sample) * sc.trace_interval;
      if (ts > sc.t1 + 1e-12 || ts >= t) break;
      result.trace.times.push_back(ts);
      result.trace.availability.push_back(snapshot());
      ++next_sample;
    }
  };

  std::vector<std::int64_t> considered(cells);
  std::vector<double> occupied_cumulative(cells);
  std::exponential_distribution<double> unit_exponential(1.0);
  double t = 0.0;
  while (true) {
    double occupied_rate = 0.0;
    for (std::size_t c = 0; c < cells; ++c) {
      occupied_rate += static_cast<double>(state.totals[c] - state.available[c]) * replenish_rate[c];
      occupied_cumulative[c] = occupied_rate;
    }
    const double total_rate = arrival_rate + occupied_rate;
    if (!(total_rate > 0.0)) break;
    t += unit_exponential(rng) / total_rate;
    if (t > sc.t1) break;
    record_until(t);

    if (rng.uniform() * total_rate < arrival_rate) {
      const std::size_t k = draw_categorical(customer_cumulative, customer_cumulative.back(), rng);
      if (const auto* fk = std::get_if<FixedK>(&sc.consideration)) {
        draw_fixed_k(state.available, fk->k, considered, rng);
      } else {
        for (std::size_t c = 0; c < cells; ++c) {
          considered[c] = draw_binomial(state.available[c], consider[k][c], rng);
        }
      }
      const double epsilon_n = m.epsilon(static_cast<Eigen::Index>(k)) * n_listings;
      const auto booked = mnl_draw(considered, utility[k], epsilon_n, rng);
      if (booked) {
        --state.available[*booked];
        if (t >= sc.t0) {
          const int i = static_cast<int>(k % 2);
          const int j = static_cast<int>(*booked % 2);
          ++ledger.counts[static_cast<std::size_t>(2 * i + j)];
          if (sc.record_events) result.events.push_back({t, i, j, *booked / 2});
        }
      }
    } else {
      const std::size_t c = draw_categorical(occupied_cumulative, occupied_rate, rng);
      ++state.available[c];
    }
  }
  record_until(std::numeric_limits<double>::infinity());

  const double exposure = (sc.t1 - sc.t0) * n_listings;
  for (std::size_t c = 0; c < 4; ++c) ledger.rates[c] = static_cast<double>(ledger.counts[c]) / exposure;
  return result;
}

}  // namespace marketlab
