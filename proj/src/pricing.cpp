#include "conflab/pricing.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "conflab/kernels.hpp"

namespace conflab {

namespace {

constexpr int kGridPoints = 10000;

double static_revenue_or_zero(const Instance& inst, double price,
                              Ordering ordering,
                              const std::vector<double>& weights,
                              const std::vector<double>& h) {
  if (ordering == Ordering::Random) {
    double acc = 0.0;
    for (std::size_t n = 0; n < weights.size(); ++n) {
      acc += weights[n] * survival(inst.dist, price - h[n]);
    }
    return price * acc;
  }
  double acc = 0.0;
  for (std::size_t n = 0; n < weights.size(); ++n) {
    const double q = survival(inst.dist, price - h[n]);
    acc += weights[n] / q;  // q == 0 -> inf -> revenue 0
  }
  return price / acc;
}

}  // namespace

OptimizedPricing optimal_static(const Instance& inst, Ordering ordering) {
  const auto weights = binomial_weights(inst.c, inst.mu);
  std::vector<double> h(weights.size());
  for (int n = 0; n <= inst.c; ++n) h[static_cast<std::size_t>(n)] = inst.h(n);

  const auto [sup_lo, sup_hi] = support(inst.dist);
  const double hi_trunc =
      std::isfinite(sup_hi) ? sup_hi : upper_quantile(inst.dist, 1e-9);
  const double p_max = hi_trunc + h.back();
  const double dp = p_max / (kGridPoints - 1);

  std::vector<double> rev(kGridPoints);
  if (inst.dist.kind == ValuationDistribution::Kind::Uniform) {
    std::vector<double> thresholds(h.size());
    for (std::size_t n = 0; n < h.size(); ++n) {
      thresholds[n] = inst.dist.hi + h[n];
    }
    kernels::grid_static_revenue_uniform(
        0.0, dp, kGridPoints, weights.data(), thresholds.data(), h.size(),
        1.0 / (inst.dist.hi - inst.dist.lo), ordering == Ordering::Newest,
        rev.data());
  } else {
    for (int i = 0; i < kGridPoints; ++i) {
      rev[static_cast<std::size_t>(i)] = static_revenue_or_zero(
          inst, std::fma(static_cast<double>(i), dp, 0.0), ordering, weights, h);
    }
  }

  std::size_t best_i = 0;
  for (std::size_t i = 1; i < rev.size(); ++i) {
    if (rev[i] > rev[best_i]) best_i = i;
  }
  double best_p = best_i * dp;
  double best_rev = rev[best_i];

  // Golden-section refinement on the winning bracket; keep the best point
  // actually evaluated and prefer lower prices on ties.
  const auto objective = [&](double p) {
    return static_revenue_or_zero(inst, p, ordering, weights, h);
  };
  double a = std::max(0.0, best_p - dp);
  double b = std::min(p_max, best_p + dp);
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double x1 = b - inv_phi * (b - a);
  double x2 = a + inv_phi * (b - a);
  double f1 = objective(x1);
  double f2 = objective(x2);
  for (int it = 0; it < 120; ++it) {
    if (f1 >= f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - inv_phi * (b - a);
      f1 = objective(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + inv_phi * (b - a);
      f2 = objective(x2);
    }
  }
  for (const auto& [x, fx] : {std::pair{x1, f1}, std::pair{x2, f2}}) {
    if (fx > best_rev || (fx == best_rev && x < best_p)) {
      best_rev = fx;
      best_p = x;
    }
  }

  OptimizedPricing out;
  out.policy = PricingPolicy::static_price_of(best_p);
  out.revenue = best_rev;
  return out;
}

OptimizedPricing optimal_dynamic_random(const Instance& inst) {
  const auto weights = binomial_weights(inst.c, inst.mu);
  std::vector<double> prices(weights.size());
  double revenue = 0.0;
  for (int n = 0; n <= inst.c; ++n) {
    const MyersonResult m = myerson(inst.dist, inst.h(n));
    prices[static_cast<std::size_t>(n)] = m.price;
    revenue += weights[static_cast<std::size_t>(n)] * m.revenue;
  }
  OptimizedPricing out;
  out.policy = PricingPolicy::count_table(prices);
  out.revenue = revenue;
  out.diagnostics.per_count_prices = prices;

  const double check = rev_random_dynamic(inst, out.policy);
  if (!(std::abs(check - revenue) <= 1e-9 * std::max(1.0, revenue))) {
    throw Error("optimal dynamic (random) revenue self-check failed");
  }
  return out;
}

OptimizedPricing optimal_dynamic_newest(const Instance& inst) {
  const double hb = hbar(inst);
  const MyersonResult m = myerson(inst.dist, hb);
  const double offset = m.price - hb;

  std::vector<double> prices(static_cast<std::size_t>(inst.c) + 1);
  for (int n = 0; n <= inst.c; ++n) {
    prices[static_cast<std::size_t>(n)] = inst.h(n) + offset;
  }
  OptimizedPricing out;
  out.policy = PricingPolicy::count_table(prices);
  out.revenue = m.revenue;
  out.diagnostics.offset = offset;
  out.diagnostics.per_count_prices = prices;

  const double check = rev_newest_dynamic(inst, out.policy);
  if (!(std::abs(check - m.revenue) <= 1e-9 * std::max(1.0, m.revenue))) {
    throw Error("review-offsetting revenue self-check failed");
  }
  return out;
}

ConfReport conf_class(const Instance& inst, PolicyClass cls) {
  ConfReport report;
  report.beta = std::numeric_limits<double>::quiet_NaN();
  report.non_degenerate = inst.h(0) < inst.h(inst.c);
  if (cls == PolicyClass::Static) {
    report.rev_random = optimal_static(inst, Ordering::Random).revenue;
    report.rev_newest = optimal_static(inst, Ordering::Newest).revenue;
    report.chi = report.rev_random / report.rev_newest;
    return report;
  }
  report.rev_random = optimal_dynamic_random(inst).revenue;
  report.rev_newest = optimal_dynamic_newest(inst).revenue;
  report.chi = report.rev_random / report.rev_newest;

  const double mass_nonneg = survival(inst.dist, 0.0);
  const double bound = 2.0 * survival(inst.dist, -inst.h(inst.c)) / mass_nonneg;
  if (!(report.chi >= 1.0 - 1e-9) || !(report.chi <= bound + 1e-9)) {
    throw Error("dynamic CoNF escaped its theoretical bounds");
  }
  return report;
}

PriceComparisonReport compare_dynamic_prices(const Instance& inst) {
  if (inst.dist.kind != ValuationDistribution::Kind::Uniform) {
    throw NotWellBehaved(
        "unique optimal prices are only certified for Uniform valuations");
  }
  PriceComparisonReport report;
  report.hbar = hbar(inst);
  const double offset = myerson(inst.dist, report.hbar).price - report.hbar;
  report.newest_prices.resize(static_cast<std::size_t>(inst.c) + 1);
  report.random_prices.resize(report.newest_prices.size());
  report.signs.resize(report.newest_prices.size());
  for (int n = 0; n <= inst.c; ++n) {
    const std::size_t i = static_cast<std::size_t>(n);
    const double hn = inst.h(n);
    report.newest_prices[i] = hn + offset;
    report.random_prices[i] = myerson(inst.dist, hn).price;
    const double diff = report.newest_prices[i] - report.random_prices[i];
    report.signs[i] = diff > 1e-9 ? 1 : (diff < -1e-9 ? -1 : 0);

    const double hgap = hn - report.hbar;
    const bool ok = (hgap > 1e-12 && diff >= -1e-9) ||
                    (hgap < -1e-12 && diff <= 1e-9) ||
                    (std::abs(hgap) <= 1e-12 && std::abs(diff) <= 1e-9);
    if (!ok) {
      throw Error("price comparison violates the expected sign pattern");
    }
  }
  return report;
}

PriceDemandReport price_demand_diagnostics(const Instance& inst) {
  const auto weights = binomial_weights(inst.c, inst.mu);
  const double hb = hbar(inst);
  const double mass_nonneg = survival(inst.dist, 0.0);

  PriceDemandReport report;
  for (int n = 0; n <= inst.c; ++n) {
    const double hn = inst.h(n);
    const double pstar = myerson(inst.dist, hn).price;
    const double bridge = hb + std::max(pstar - hn, 0.0);
    report.expected_price_ratio +=
        weights[static_cast<std::size_t>(n)] * (pstar / bridge);
    const double demand_ratio =
        survival(inst.dist, pstar - hn) /
        survival(inst.dist, std::max(pstar - hn, 0.0));
    report.max_demand_ratio = std::max(report.max_demand_ratio, demand_ratio);
  }
  if (!(report.expected_price_ratio <= 2.0 + 1e-9) ||
      !(report.max_demand_ratio <= 1.0 / mass_nonneg + 1e-9)) {
    throw Error("price/demand diagnostics escaped their bounds");
  }
  return report;
}

}  // namespace conflab
