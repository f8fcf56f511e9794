#include "marketlab/market_model.hpp"

#include <cmath>
#include <set>
#include <sstream>

#include "marketlab/errors.hpp"

namespace marketlab {

namespace {

constexpr double kShareTolerance = 1e-9;
constexpr double kBoundsSlack = 1e-9;

[[noreturn]] void fail(ErrorKind kind, const std::string& msg) {
  throw MarketError(kind, msg);
}

void require_positive(double value, const std::string& name) {
  if (!(value > 0.0) || !std::isfinite(value)) {
    fail(ErrorKind::NonPositiveParameter, name + " must be positive and finite");
  }
}

void require_probability(double value, const std::string& name) {
  if (!(value > 0.0 && value <= 1.0)) {
    fail(ErrorKind::NonPositiveParameter, name + " must lie in (0, 1]");
  }
}

void require_utility(double value, const std::string& name,
                     const ValidationOptions& opts) {
  if (opts.allow_zero_utility && value == 0.0) return;
  require_positive(value, name);
}

double check_share_sum(double sum, const std::string& what) {
  if (std::abs(sum - 1.0) > kShareTolerance) {
    std::ostringstream os;
    os << what << " shares sum to " << sum;
    fail(ErrorKind::ShareSumMismatch, os.str());
  }
  return sum;
}

void require_fraction_open(double a, const std::string& name) {
  if (!(a > 0.0 && a < 1.0)) {
    fail(ErrorKind::InvalidConfig, name + " must lie in (0, 1)");
  }
}

}  // namespace

std::string_view to_string(InterventionClass c) {
  switch (c) {
    case InterventionClass::Positive: return "positive";
    case InterventionClass::Negative: return "negative";
    case InterventionClass::Indeterminate: return "indeterminate";
  }
  return "indeterminate";
}

std::string describe(const DesignSpec& d) {
  std::ostringstream os;
  std::visit(
      [&os](const auto& x) {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, design::GlobalControl>) {
          os << "GC";
        } else if constexpr (std::is_same_v<T, design::GlobalTreatment>) {
          os << "GT";
        } else if constexpr (std::is_same_v<T, design::CustomerSide>) {
          os << "CR(" << x.a_c << ")";
        } else if constexpr (std::is_same_v<T, design::ListingSide>) {
          os << "LR(" << x.a_l << ")";
        } else if constexpr (std::is_same_v<T, design::TwoSided>) {
          os << "TSR(" << x.a_c << "," << x.a_l << ")";
        } else {
          os << "Cluster(";
          for (std::size_t t = 0; t < x.assignment.size(); ++t) {
            os << (t ? "," : "") << x.assignment[t];
          }
          os << ")";
        }
      },
      d);
  return os.str();
}

Intervention Intervention::multiplicative(const MarketConfig& cfg, double lift) {
  Intervention itv;
  const auto g = cfg.num_customer_types();
  const auto n = cfg.num_listing_types();
  itv.v_treated.resize(static_cast<Eigen::Index>(g), static_cast<Eigen::Index>(n));
  for (std::size_t c = 0; c < g; ++c) {
    for (std::size_t t = 0; t < n; ++t) {
      itv.v_treated(c, t) = lift * cfg.customers[c].v.at(t);
    }
  }
  return itv;
}

Intervention Intervention::null(const MarketConfig& cfg) {
  return multiplicative(cfg, 1.0);
}

MarketConfig validate_market(MarketConfig cfg, const ValidationOptions& opts) {
  if (cfg.customers.empty() || cfg.listings.empty()) {
    fail(ErrorKind::InvalidConfig, "market needs at least one customer and one listing type");
  }
  require_positive(cfg.lambda, "lambda");
  require_positive(cfg.tau, "tau");

  std::set<std::string> ids;
  double rho_sum = 0.0;
  for (const auto& l : cfg.listings) {
    if (!ids.insert("L:" + l.id).second) {
      fail(ErrorKind::InvalidConfig, "duplicate listing type id '" + l.id + "'");
    }
    require_positive(l.rho, "rho(" + l.id + ")");
    require_positive(l.nu, "nu(" + l.id + ")");
    rho_sum += l.rho;
  }
  double phi_sum = 0.0;
  const auto n = cfg.num_listing_types();
  for (const auto& c : cfg.customers) {
    if (!ids.insert("C:" + c.id).second) {
      fail(ErrorKind::InvalidConfig, "duplicate customer type id '" + c.id + "'");
    }
    require_positive(c.phi, "phi(" + c.id + ")");
    require_positive(c.epsilon, "epsilon(" + c.id + ")");
    if (c.alpha.size() != n || c.v.size() != n) {
      fail(ErrorKind::InvalidConfig,
           "alpha and v of customer type '" + c.id + "' must cover every listing type");
    }
    for (std::size_t t = 0; t < n; ++t) {
      const auto pair = c.id + "," + cfg.listings[t].id;
      require_probability(c.alpha[t], "alpha(" + pair + ")");
      require_utility(c.v[t], "v(" + pair + ")", opts);
    }
    phi_sum += c.phi;
  }
  check_share_sum(phi_sum, "customer");
  check_share_sum(rho_sum, "listing");
  for (auto& c : cfg.customers) c.phi /= phi_sum;
  for (auto& l : cfg.listings) l.rho /= rho_sum;
  return cfg;
}

void validate_intervention(const MarketConfig& cfg, const Intervention& itv,
                           const ValidationOptions& opts) {
  const auto g = static_cast<Eigen::Index>(cfg.num_customer_types());
  const auto n = static_cast<Eigen::Index>(cfg.num_listing_types());
  if (itv.v_treated.rows() != g || itv.v_treated.cols() != n) {
    fail(ErrorKind::InvalidConfig, "treated utilities must be keyed over every (customer, listing) pair");
  }
  const bool inherit_alpha = itv.alpha_treated.size() == 0;
  if (!inherit_alpha && (itv.alpha_treated.rows() != g || itv.alpha_treated.cols() != n)) {
    fail(ErrorKind::InvalidConfig, "treated consideration probabilities must be keyed over every pair");
  }
  for (Eigen::Index c = 0; c < g; ++c) {
    for (Eigen::Index t = 0; t < n; ++t) {
      require_utility(itv.v_treated(c, t), "treated v", opts);
      if (!inherit_alpha) require_probability(itv.alpha_treated(c, t), "treated alpha");
    }
  }
}

void validate_design(const MarketConfig& cfg, const DesignSpec& d) {
  std::visit(
      [&cfg](const auto& x) {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, design::CustomerSide>) {
          require_fraction_open(x.a_c, "CR a_C");
        } else if constexpr (std::is_same_v<T, design::ListingSide>) {
          require_fraction_open(x.a_l, "LR a_L");
        } else if constexpr (std::is_same_v<T, design::TwoSided>) {
          if (!(x.a_c > 0.0 && x.a_c <= 1.0 && x.a_l > 0.0 && x.a_l <= 1.0)) {
            fail(ErrorKind::InvalidConfig, "TSR fractions must lie in (0, 1]");
          }
        } else if constexpr (std::is_same_v<T, design::Cluster>) {
          if (x.assignment.size() != cfg.num_listing_types()) {
            fail(ErrorKind::InvalidConfig, "cluster assignment must cover every listing type");
          }
          for (int a : x.assignment) {
            if (a != 0 && a != 1) fail(ErrorKind::InvalidConfig, "cluster assignment entries must be 0 or 1");
          }
        }
      },
      d);
}

ExpandedMarket expand_for_design(const MarketConfig& raw, const Intervention& itv,
                                 const DesignSpec& d, const ValidationOptions& opts) {
  const MarketConfig cfg = validate_market(raw, opts);
  validate_intervention(cfg, itv, opts);
  validate_design(cfg, d);

  const auto g = cfg.num_customer_types();
  const auto n = cfg.num_listing_types();

  double a_c = 0.0;
  std::vector<double> treated_share(n, 0.0);
  std::visit(
      [&](const auto& x) {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, design::GlobalControl>) {
          a_c = 0.0;
        } else if constexpr (std::is_same_v<T, design::GlobalTreatment>) {
          a_c = 1.0;
          std::fill(treated_share.begin(), treated_share.end(), 1.0);
        } else if constexpr (std::is_same_v<T, design::CustomerSide>) {
          a_c = x.a_c;
          std::fill(treated_share.begin(), treated_share.end(), 1.0);
        } else if constexpr (std::is_same_v<T, design::ListingSide>) {
          a_c = 1.0;
          std::fill(treated_share.begin(), treated_share.end(), x.a_l);
        } else if constexpr (std::is_same_v<T, design::TwoSided>) {
          a_c = x.a_c;
          std::fill(treated_share.begin(), treated_share.end(), x.a_l);
        } else {
          a_c = 1.0;
          for (std::size_t t = 0; t < n; ++t) treated_share[t] = x.assignment[t];
        }
      },
      d);

  ExpandedMarket m;
  m.num_customer_types = g;
  m.num_listing_types = n;
  m.lambda = cfg.lambda;
  m.tau = cfg.tau;
  m.a_c = a_c;
  m.phi.setZero(static_cast<Eigen::Index>(2 * g));
  m.epsilon.setZero(static_cast<Eigen::Index>(2 * g));
  m.rho.setZero(static_cast<Eigen::Index>(2 * n));
  m.nu.setZero(static_cast<Eigen::Index>(2 * n));
  m.alpha.setZero(static_cast<Eigen::Index>(2 * g), static_cast<Eigen::Index>(2 * n));
  m.v.setZero(static_cast<Eigen::Index>(2 * g), static_cast<Eigen::Index>(2 * n));

  double treated_mass = 0.0;
  for (std::size_t t = 0; t < n; ++t) {
    const auto& l = cfg.listings[t];
    const auto c0 = ExpandedMarket::listing_cell(t, 0);
    const auto c1 = ExpandedMarket::listing_cell(t, 1);
    m.rho(c1) = treated_share[t] * l.rho;
    m.rho(c0) = l.rho - m.rho(c1);
    m.nu(c0) = m.nu(c1) = l.nu;
    treated_mass += m.rho(c1);
  }
  m.a_l = treated_mass;

  const bool inherit_alpha = itv.alpha_treated.size() == 0;
  for (std::size_t c = 0; c < g; ++c) {
    const auto& cust = cfg.customers[c];
    const auto k0 = ExpandedMarket::customer_cell(c, 0);
    const auto k1 = ExpandedMarket::customer_cell(c, 1);
    m.phi(k1) = a_c * cust.phi;
    m.phi(k0) = cust.phi - m.phi(k1);
    m.epsilon(k0) = m.epsilon(k1) = cust.epsilon;
    for (std::size_t t = 0; t < n; ++t) {
      for (int i = 0; i < 2; ++i) {
        for (int j = 0; j < 2; ++j) {
          const auto k = ExpandedMarket::customer_cell(c, i);
          const auto l = ExpandedMarket::listing_cell(t, j);
          const bool treated = (i == 1 && j == 1);
          const auto ci = static_cast<Eigen::Index>(c);
          const auto ti = static_cast<Eigen::Index>(t);
          m.v(k, l) = treated ? itv.v_treated(ci, ti) : cust.v[t];
          m.alpha(k, l) = (treated && !inherit_alpha) ? itv.alpha_treated(ci, ti)
                                                       : cust.alpha[t];
        }
      }
    }
  }
  return m;
}

ExpandedMarket ExpandedMarket::with_fractions(double new_a_c, double new_a_l) const {
  ExpandedMarket out = *this;
  for (std::size_t c = 0; c < num_customer_types; ++c) {
    const auto k0 = customer_cell(c, 0), k1 = customer_cell(c, 1);
    const double total = phi(k0) + phi(k1);
    out.phi(k1) = new_a_c * total;
    out.phi(k0) = total - out.phi(k1);
  }
  for (std::size_t t = 0; t < num_listing_types; ++t) {
    const auto c0 = listing_cell(t, 0), c1 = listing_cell(t, 1);
    const double total = rho(c0) + rho(c1);
    out.rho(c1) = new_a_l * total;
    out.rho(c0) = total - out.rho(c1);
  }
  out.a_c = new_a_c;
  out.a_l = new_a_l;
  return out;
}

ExpandedMarket ExpandedMarket::control_only() const {
  ExpandedMarket out = *this;
  for (std::size_t c = 0; c < num_customer_types; ++c) {
    for (std::size_t t = 0; t < num_listing_types; ++t) {
      const auto k1 = customer_cell(c, 1), k0 = customer_cell(c, 0);
      const auto l1 = listing_cell(t, 1);
      out.v(k1, l1) = v(k0, l1);
      out.alpha(k1, l1) = alpha(k0, l1);
    }
  }
  return out;
}

void check_state_bounds(const StateVector& s, const ExpandedMarket& m) {
  if (s.size() != m.rho.size()) {
    throw MarketError(ErrorKind::StateOutOfBounds, "state dimension does not match the market");
  }
  for (Eigen::Index c = 0; c < s.size(); ++c) {
    if (!(s(c) >= -kBoundsSlack && s(c) <= m.rho(c) + kBoundsSlack)) {
      std::ostringstream os;
      os << "s[" << c << "] = " << s(c) << " outside [0, " << m.rho(c) << "]";
      throw MarketError(ErrorKind::StateOutOfBounds, os.str());
    }
  }
}

ChoiceProbabilities choice_probabilities(std::size_t customer_cell, const StateVector& s,
                                         const ExpandedMarket& m) {
  check_state_bounds(s, m);
  const auto k = static_cast<Eigen::Index>(customer_cell);
  ChoiceProbabilities out;
  out.listing = m.alpha.row(k).transpose().cwiseProduct(m.v.row(k).transpose()).cwiseProduct(s);
  const double denom = m.epsilon(k) + out.listing.sum();
  out.listing /= denom;
  out.outside = m.epsilon(k) / denom;
  return out;
}

InterventionClass classify_intervention(const MarketConfig& cfg, const Intervention& itv) {
  bool all_up = true, all_down = true;
  const bool inherit_alpha = itv.alpha_treated.size() == 0;
  for (std::size_t c = 0; c < cfg.num_customer_types(); ++c) {
    for (std::size_t t = 0; t < cfg.num_listing_types(); ++t) {
      const auto ci = static_cast<Eigen::Index>(c), ti = static_cast<Eigen::Index>(t);
      const double control = cfg.customers[c].alpha[t] * cfg.customers[c].v[t];
      const double a = inherit_alpha ? cfg.customers[c].alpha[t] : itv.alpha_treated(ci, ti);
      const double treated = a * itv.v_treated(ci, ti);
      all_up = all_up && treated > control;
      all_down = all_down && treated < control;
    }
  }
  if (all_up) return InterventionClass::Positive;
  if (all_down) return InterventionClass::Negative;
  return InterventionClass::Indeterminate;
}

}  // namespace marketlab
