#pragma once

// Optimal pricing: static price search, per-count optimal dynamic prices for
// Random, the review-offsetting policy for Newest-First, class-level CoNF and
// the price/demand ratio diagnostics.

#include <optional>
#include <vector>

#include "conflab/analytics.hpp"
#include "conflab/model.hpp"

namespace conflab {

struct PricingDiagnostics {
  std::optional<double> offset;
  std::optional<std::vector<double>> per_count_prices;
  std::optional<double> expected_price_ratio;
  std::optional<double> max_demand_ratio;
};

struct OptimizedPricing {
  PricingPolicy policy;
  double revenue = 0.0;
  PricingDiagnostics diagnostics;
};

enum class PolicyClass { Static, Dynamic };

// Best static price for the ordering's closed-form revenue: 1e4-point grid
// over [0, support_hi + h(c)] (unbounded supports truncated at the 1e-9
// survival quantile) refined by golden section; ties break toward the lowest
// price. Absorbing prices count as zero revenue under Newest-First.
OptimizedPricing optimal_static(const Instance& inst, Ordering ordering);

// Per-count revenue-maximizing prices; revenue E_N[r*(Theta + h(N))].
OptimizedPricing optimal_dynamic_random(const Instance& inst);

// Review-offsetting policy rho(n) = h(n) + a* with a* = p* - hbar, where p*
// maximizes p * P[Theta + hbar >= p]; equalizes the purchase probability
// across review states and earns r*(Theta + hbar).
OptimizedPricing optimal_dynamic_newest(const Instance& inst);

// Ratio of class-optimal revenues. The dynamic case is verified against
// 1 <= chi <= 2 * P[Theta >= -h(c)] / P[Theta >= 0] before returning.
ConfReport conf_class(const Instance& inst, PolicyClass cls);

struct PriceComparisonReport {
  std::vector<double> newest_prices;
  std::vector<double> random_prices;
  std::vector<int> signs;  // sign of newest - random per count
  double hbar = 0.0;
};

// Per-count sign of rho_newest(n) - rho_random(n); requires a valuation
// distribution with a provably unique optimal price (Uniform), otherwise
// NotWellBehaved.
PriceComparisonReport compare_dynamic_prices(const Instance& inst);

struct PriceDemandReport {
  double expected_price_ratio = 0.0;
  double max_demand_ratio = 0.0;
};

// E_N[p*(Theta+h(N)) / p~_N] and max_n of the demand ratio under the bridge
// prices p~_n = hbar + max(p*(Theta+h(n)) - h(n), 0); verified against the
// bounds 2 and 1/P[Theta >= 0].
PriceDemandReport price_demand_diagnostics(const Instance& inst);

}  // namespace conflab
