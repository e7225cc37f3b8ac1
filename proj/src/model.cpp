#include "conflab/model.hpp"

#include <algorithm>
#include <cmath>

#include <boost/math/special_functions/beta.hpp>

#include "conflab/kernels.hpp"

namespace conflab {

Estimator Estimator::beta_mean(double a, double b) {
  if (!(a > 0) || !(b > 0) || !std::isfinite(a) || !std::isfinite(b)) {
    throw InvalidEstimator("beta prior requires a > 0 and b > 0");
  }
  Estimator e;
  e.kind = Kind::BetaMean;
  e.a = a;
  e.b = b;
  return e;
}

Estimator Estimator::beta_quantile(double a, double b, double phi) {
  if (!(a > 0) || !(b > 0) || !std::isfinite(a) || !std::isfinite(b)) {
    throw InvalidEstimator("beta prior requires a > 0 and b > 0");
  }
  if (!(phi > 0) || !(phi < 1)) {
    throw InvalidEstimator("quantile level must lie in (0,1)");
  }
  Estimator e;
  e.kind = Kind::BetaQuantile;
  e.a = a;
  e.b = b;
  e.phi = phi;
  return e;
}

Estimator Estimator::table(std::vector<double> values) {
  if (values.empty()) throw InvalidEstimator("table estimator needs values");
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values[i])) {
      throw InvalidEstimator("table estimator values must be finite");
    }
    if (i > 0 && values[i] < values[i - 1]) {
      throw InvalidEstimator("table estimator values must be non-decreasing");
    }
  }
  Estimator e;
  e.kind = Kind::Table;
  e.table_values = std::move(values);
  return e;
}

namespace {

// phi-quantile of Beta(a, b) by bisection on the regularized incomplete beta.
double beta_quantile_bisect(double a, double b, double phi) {
  double lo = 0.0, hi = 1.0;
  for (int it = 0; it < 100 && hi - lo > 1e-12; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (boost::math::ibeta(a, b, mid) < phi) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace

double estimate(const Estimator& est, int n, int c) {
  if (n < 0 || n > c) {
    throw IndexOutOfRange("positive-review count outside [0, c]");
  }
  switch (est.kind) {
    case Estimator::Kind::BetaMean:
      return (est.a + n) / (est.a + est.b + c);
    case Estimator::Kind::BetaQuantile:
      return beta_quantile_bisect(est.a + n, est.b + c - n, est.phi);
    case Estimator::Kind::Table:
      if (est.table_values.size() != static_cast<std::size_t>(c) + 1) {
        throw InvalidEstimator("table estimator length must equal c + 1");
      }
      return est.table_values[static_cast<std::size_t>(n)];
  }
  throw InvalidEstimator("unknown estimator kind");
}

double estimate_with_prior(const Estimator& est, int n, int c, double a,
                           double b) {
  if (n < 0 || n > c) {
    throw IndexOutOfRange("positive-review count outside [0, c]");
  }
  switch (est.kind) {
    case Estimator::Kind::BetaMean:
      return (a + n) / (a + b + c);
    case Estimator::Kind::BetaQuantile:
      return beta_quantile_bisect(a + n, b + c - n, est.phi);
    case Estimator::Kind::Table:
      throw InvalidEstimator("table estimators have no Beta prior to adjust");
  }
  throw InvalidEstimator("unknown estimator kind");
}

bool estimator_strictly_increasing(const Estimator& est, int c) {
  for (int n = 1; n <= c; ++n) {
    if (!(estimate(est, n, c) > estimate(est, n - 1, c))) return false;
  }
  return true;
}

Instance make_instance(double mu, ValuationDistribution dist, int c,
                       Estimator estimator) {
  if (!(mu > 0) || !(mu < 1)) throw InvalidInstance("mu must lie in (0,1)");
  if (c < 1) throw InvalidInstance("attention budget c must be >= 1");
  if (estimator.kind == Estimator::Kind::Table &&
      estimator.table_values.size() != static_cast<std::size_t>(c) + 1) {
    throw InvalidInstance("table estimator length must equal c + 1");
  }
  if (!(survival(dist, 0.0) > 0)) {
    throw InvalidInstance(
        "valuation distribution needs positive mass on non-negative values");
  }
  Instance inst;
  inst.mu = mu;
  inst.dist = std::move(dist);
  inst.c = c;
  inst.estimator = std::move(estimator);
  return inst;
}

int ReviewState::n_pos() const {
  int n = 0;
  for (auto b : bits) n += b;
  return n;
}

std::uint64_t ReviewState::index() const {
  std::uint64_t idx = 0;
  for (std::size_t i = 0; i < bits.size(); ++i) {
    if (bits[i]) idx |= (std::uint64_t{1} << i);
  }
  return idx;
}

ReviewState ReviewState::from_index(std::uint64_t idx, int c) {
  ReviewState s;
  s.bits.resize(static_cast<std::size_t>(c));
  for (int i = 0; i < c; ++i) {
    s.bits[static_cast<std::size_t>(i)] =
        static_cast<std::uint8_t>((idx >> i) & 1u);
  }
  return s;
}

std::string ReviewState::to_string() const {
  std::string s;
  s.reserve(bits.size());
  for (auto b : bits) s.push_back(b ? '1' : '0');
  return s;
}

PricingPolicy PricingPolicy::static_price_of(double p) {
  if (!std::isfinite(p)) throw InvalidPolicy("price must be finite");
  PricingPolicy pol;
  pol.kind = Kind::Static;
  pol.static_price = p;
  return pol;
}

PricingPolicy PricingPolicy::count_table(std::vector<double> prices) {
  if (prices.empty()) throw InvalidPolicy("count table needs prices");
  for (double p : prices) {
    if (!std::isfinite(p)) throw InvalidPolicy("prices must be finite");
  }
  PricingPolicy pol;
  pol.kind = Kind::CountTable;
  pol.count_prices = std::move(prices);
  return pol;
}

PricingPolicy PricingPolicy::state_table(
    std::unordered_map<std::uint64_t, double> prices) {
  if (prices.empty()) throw InvalidPolicy("state table needs prices");
  for (const auto& [k, p] : prices) {
    if (!std::isfinite(p)) throw InvalidPolicy("prices must be finite");
  }
  PricingPolicy pol;
  pol.kind = Kind::StateTable;
  pol.state_prices = std::move(prices);
  return pol;
}

double PricingPolicy::price_for_count(int n) const {
  switch (kind) {
    case Kind::Static:
      return static_price;
    case Kind::CountTable:
      if (n < 0 || static_cast<std::size_t>(n) >= count_prices.size()) {
        throw IndexOutOfRange("count outside price table");
      }
      return count_prices[static_cast<std::size_t>(n)];
    case Kind::StateTable:
      throw InvalidPolicy("state-table policy needs the exact review state");
  }
  throw InvalidPolicy("unknown policy kind");
}

double PricingPolicy::price_for_state(std::uint64_t state_index, int n) const {
  if (kind != Kind::StateTable) return price_for_count(n);
  const auto it = state_prices.find(state_index);
  if (it == state_prices.end()) {
    throw InvalidPolicy("state table does not cover state " +
                        std::to_string(state_index));
  }
  return it->second;
}

void validate_policy(const PricingPolicy& policy, int c) {
  switch (policy.kind) {
    case PricingPolicy::Kind::Static:
      return;
    case PricingPolicy::Kind::CountTable:
      if (policy.count_prices.size() != static_cast<std::size_t>(c) + 1) {
        throw InvalidPolicy("count table must have c + 1 prices");
      }
      return;
    case PricingPolicy::Kind::StateTable: {
      if (c > kMaxEnumerableC) {
        throw InvalidPolicy("state tables limited to c <= 20");
      }
      const std::uint64_t n_states = std::uint64_t{1} << c;
      for (std::uint64_t s = 0; s < n_states; ++s) {
        if (!policy.state_prices.count(s)) {
          throw InvalidPolicy("state table must cover every state");
        }
      }
      return;
    }
  }
}

double purchase_prob(const Instance& inst, int n, double price) {
  return survival(inst.dist, price - inst.h(n));
}

PriceAssumptionReport validate_price(const Instance& inst, double price) {
  PriceAssumptionReport report;
  double q_min = 1.0;
  for (int n = 0; n <= inst.c; ++n) {
    q_min = std::min(q_min, purchase_prob(inst, n, price));
  }
  report.non_absorbing = q_min > kAbsorbingEps;
  report.non_degenerate =
      purchase_prob(inst, 0, price) < purchase_prob(inst, inst.c, price);
  return report;
}

std::vector<double> binomial_weights(int c, double mu) {
  std::vector<double> w(static_cast<std::size_t>(c) + 1);
  if (c <= 50) {
    // Binomial coefficients stay exactly representable here.
    double coeff = 1.0;
    for (int n = 0; n <= c; ++n) {
      w[static_cast<std::size_t>(n)] =
          coeff * std::pow(mu, n) * std::pow(1.0 - mu, c - n);
      coeff = coeff * (c - n) / (n + 1);
    }
    return w;
  }
  const double log_mu = std::log(mu);
  const double log_1mu = std::log1p(-mu);
  const double lg_c = std::lgamma(static_cast<double>(c) + 1.0);
  for (int n = 0; n <= c; ++n) {
    const double lw = lg_c - std::lgamma(static_cast<double>(n) + 1.0) -
                      std::lgamma(static_cast<double>(c - n) + 1.0) +
                      n * log_mu + (c - n) * log_1mu;
    w[static_cast<std::size_t>(n)] = std::exp(lw);
  }
  return w;
}

double hbar(const Instance& inst) {
  const auto w = binomial_weights(inst.c, inst.mu);
  std::vector<double> h(w.size());
  for (int n = 0; n <= inst.c; ++n) {
    h[static_cast<std::size_t>(n)] = inst.h(n);
  }
  return kernels::dot(w.data(), h.data(), w.size());
}

}  // namespace conflab
