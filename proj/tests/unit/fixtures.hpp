#pragma once

#include <random>

#include "marketlab/analysis_harness.hpp"
#include "marketlab/market_model.hpp"

namespace marketlab::testing {

// Frozen values from tests/oracles/oracles.py (closed forms and bisection).
namespace oracle {
inline constexpr double kSgc = 0.7989359330750648;
inline constexpr double kPgc = 0.20106406692493523;
inline constexpr double kSgt = 0.7678668207807172;
inline constexpr double kPgt = 0.23213317921928242;
inline constexpr double kGte = 0.031069112294347195;
inline constexpr double kChoiceV = 0.23954372623574147;
inline constexpr double kChoiceVt = 0.2824854703307742;
inline constexpr double kDemandQ11 = 0.14534647616938015;
inline constexpr double kDemandQ10 = 0.11629194816701739;
inline constexpr double kDemandGte = 0.042941744095032736;
inline constexpr double kDemandLr = 0.05810905600472552;
inline constexpr double kDemandLrBias = 0.015167311909692782;
inline constexpr double kSupplyQ01 = 0.22223790038097926;
inline constexpr double kSupplyQ11 = 0.27776209961902076;
inline constexpr double kSupplyCr = 0.22209679695216591;
inline constexpr double kScheduleAc = 0.8160602794142788;
inline constexpr double kScheduleAl = 0.6839397205857212;
inline constexpr double kBeta1 = 0.36787944117144233;
inline constexpr double kZeta = 0.26101459828325785;
inline constexpr double kEta = 0.5411296383204892;
inline constexpr double kCrLimitLargeLambda = 0.3290371065639137;
inline constexpr double kClusterSeparableGte = 0.03369621888417454;
}  // namespace oracle

inline Experiment calibration(double lambda = 1.0, double tau = 1.0) {
  return homogeneous_experiment(0.315, 0.3937, lambda, tau);
}

inline std::vector<double> dirichlet(std::size_t n, std::mt19937_64& rng) {
  std::gamma_distribution<double> g(2.0, 1.0);
  std::vector<double> w(n);
  double total = 0.0;
  for (auto& x : w) total += (x = g(rng));
  for (auto& x : w) x /= total;
  return w;
}

/// Random market with up to 3 x 3 types and a positive intervention.
inline Experiment random_experiment(std::mt19937_64& rng, double lambda = 1.0, double tau = 1.0) {
  std::uniform_int_distribution<int> types(1, 3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const std::size_t G = static_cast<std::size_t>(types(rng));
  const std::size_t T = static_cast<std::size_t>(types(rng));
  MarketConfig cfg;
  cfg.lambda = lambda;
  cfg.tau = tau;
  const auto phi = dirichlet(G, rng);
  const auto rho = dirichlet(T, rng);
  for (std::size_t t = 0; t < T; ++t) {
    cfg.listings.push_back({"l" + std::to_string(t), rho[t], 0.5 + 1.5 * u(rng)});
  }
  Intervention itv;
  itv.v_treated.resize(static_cast<Eigen::Index>(G), static_cast<Eigen::Index>(T));
  for (std::size_t g = 0; g < G; ++g) {
    CustomerType c{"c" + std::to_string(g), phi[g], 0.5 + 1.5 * u(rng), {}, {}};
    for (std::size_t t = 0; t < T; ++t) {
      c.alpha.push_back(0.2 + 0.8 * u(rng));
      c.v.push_back(0.1 + 1.9 * u(rng));
      itv.v_treated(static_cast<Eigen::Index>(g), static_cast<Eigen::Index>(t)) =
          c.v.back() * (1.05 + 0.5 * u(rng));
    }
    cfg.customers.push_back(std::move(c));
  }
  cfg = validate_market(std::move(cfg));
  validate_intervention(cfg, itv);
  return {cfg, itv, {}, std::nullopt};
}

}  // namespace marketlab::testing
