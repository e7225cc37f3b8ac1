#pragma once

// Market instance data model: quality estimator h, purchase probabilities,
// pricing policies and price-assumption checks.

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "conflab/distributions.hpp"
#include "conflab/errors.hpp"

namespace conflab {

struct Estimator {
  enum class Kind { BetaMean, BetaQuantile, Table };

  Kind kind = Kind::BetaMean;
  double a = 1.0, b = 1.0;  // Beta prior parameters
  double phi = 0.5;         // quantile level for BetaQuantile
  std::vector<double> table_values;

  static Estimator beta_mean(double a, double b);
  static Estimator beta_quantile(double a, double b, double phi);
  // Values must be finite and non-decreasing. Ties are accepted so that
  // constant estimators (the degenerate-price edge case) stay expressible;
  // strict monotonicity is what the core theory assumes and can be queried.
  static Estimator table(std::vector<double> values);
};

// h(n): BetaMean -> (a+n)/(a+b+c); BetaQuantile -> phi-quantile of
// Beta(a+n, b+c-n); Table -> values[n]. Throws IndexOutOfRange for n outside
// [0, c]; for Table, the stored values must have length c+1.
double estimate(const Estimator& est, int n, int c);

// Same with the Beta prior overridden (time-varying-prior model variant).
double estimate_with_prior(const Estimator& est, int n, int c, double a,
                           double b);

bool estimator_strictly_increasing(const Estimator& est, int c);

// One market configuration E(mu, F, a, b, c, h).
struct Instance {
  double mu = 0.5;
  ValuationDistribution dist;
  int c = 1;
  Estimator estimator;

  double h(int n) const { return estimate(estimator, n, c); }
};

Instance make_instance(double mu, ValuationDistribution dist, int c,
                       Estimator estimator);

// Number of states 2^c becomes enumerable (state tables, exact chains).
constexpr int kMaxEnumerableC = 20;

struct ReviewState {
  // bits[0] is the most recent rating.
  std::vector<std::uint8_t> bits;

  int n_pos() const;
  std::uint64_t index() const;  // bits[i] -> bit i of the index
  static ReviewState from_index(std::uint64_t idx, int c);
  std::string to_string() const;
};

struct PricingPolicy {
  enum class Kind { Static, CountTable, StateTable };

  Kind kind = Kind::Static;
  double static_price = 0.0;
  std::vector<double> count_prices;                       // length c+1
  std::unordered_map<std::uint64_t, double> state_prices; // full 2^c cover

  static PricingPolicy static_price_of(double p);
  static PricingPolicy count_table(std::vector<double> prices);
  static PricingPolicy state_table(
      std::unordered_map<std::uint64_t, double> prices);

  // Counts only on n for Static/CountTable; StateTable needs the exact state.
  bool depends_on_state_bits() const { return kind == Kind::StateTable; }

  double price_for_count(int n) const;
  double price_for_state(std::uint64_t state_index, int n) const;
};

void validate_policy(const PricingPolicy& policy, int c);

// P[Theta + h(n) >= price] = survival(price - h(n)).
double purchase_prob(const Instance& inst, int n, double price);

struct PriceAssumptionReport {
  bool non_absorbing = false;
  bool non_degenerate = false;
};

// Purchase probabilities below this threshold count as zero; it guards the
// 1/q terms in the Newest-First formulas from masquerading as finite.
constexpr double kAbsorbingEps = 1e-15;

PriceAssumptionReport validate_price(const Instance& inst, double price);

// E_{N ~ Binomial(c, mu)}[h(N)].
double hbar(const Instance& inst);

// Binomial(c, mu) pmf, computed through log-gamma so c up to 1e4 is fine.
std::vector<double> binomial_weights(int c, double mu);

}  // namespace conflab
