#include "conflab/analytics.hpp"

#include <bit>
#include <cmath>
#include <limits>

#include "conflab/kernels.hpp"

namespace conflab {

namespace {

std::vector<double> purchase_vector(const Instance& inst, double price) {
  std::vector<double> q(static_cast<std::size_t>(inst.c) + 1);
  for (int n = 0; n <= inst.c; ++n) {
    q[static_cast<std::size_t>(n)] = purchase_prob(inst, n, price);
  }
  return q;
}

void require_non_absorbing(const std::vector<double>& q) {
  for (double qn : q) {
    if (!(qn > kAbsorbingEps)) {
      throw AbsorbingPrice("price leaves a review state with no sales");
    }
  }
}

double lchoose(int n, int k) {
  return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
}

}  // namespace

double rev_random_static(const Instance& inst, double price) {
  const auto w = binomial_weights(inst.c, inst.mu);
  const auto q = purchase_vector(inst, price);
  return price * kernels::dot(w.data(), q.data(), w.size());
}

double rev_newest_static(const Instance& inst, double price) {
  const auto w = binomial_weights(inst.c, inst.mu);
  const auto q = purchase_vector(inst, price);
  require_non_absorbing(q);
  return price / kernels::recip_dot(w.data(), q.data(), w.size());
}

double beta_ratio(const Instance& inst, double price) {
  return purchase_prob(inst, inst.c, price) / purchase_prob(inst, 0, price);
}

ConfReport conf_static(const Instance& inst, double price) {
  const auto w = binomial_weights(inst.c, inst.mu);
  const auto q = purchase_vector(inst, price);
  require_non_absorbing(q);

  const double mean_q = kernels::dot(w.data(), q.data(), w.size());
  const double mean_inv_q = kernels::recip_dot(w.data(), q.data(), w.size());

  ConfReport report;
  report.rev_random = price * mean_q;
  report.rev_newest = price / mean_inv_q;
  report.beta = q.back() / q.front();
  report.non_degenerate = q.front() < q.back();

  // chi as the explicit double sum over count pairs. Past a few thousand
  // counts the quadratic loop stops paying for itself and the product form
  // (which the sum factorizes into exactly) takes over.
  const std::size_t m = w.size();
  if (m <= 2048) {
    std::vector<double> wq(m), w_over_q(m);
    for (std::size_t i = 0; i < m; ++i) {
      wq[i] = w[i] * q[i];
      w_over_q[i] = w[i] / q[i];
    }
    report.chi = kernels::cross_sum(wq.data(), w_over_q.data(), m);
  } else {
    report.chi = mean_q * mean_inv_q;
  }

  const double ratio = report.rev_random / report.rev_newest;
  if (!(std::abs(report.chi - ratio) <= 1e-10 * std::max(1.0, std::abs(ratio)))) {
    throw Error("CoNF double sum disagrees with the revenue ratio");
  }
  return report;
}

std::vector<double> stationary_newest_counts(const Instance& inst, double price) {
  const auto w = binomial_weights(inst.c, inst.mu);
  const auto q = purchase_vector(inst, price);
  require_non_absorbing(q);
  std::vector<double> pi(w.size());
  double total = 0.0;
  for (std::size_t n = 0; n < w.size(); ++n) {
    pi[n] = w[n] / q[n];
    total += pi[n];
  }
  for (double& p : pi) p /= total;
  return pi;
}

double expected_positive_reviews(const Instance& inst, double price,
                                 Ordering ordering) {
  if (ordering == Ordering::Random) {
    // The displayed counts are Binomial(c, mu) regardless of the price.
    return inst.c * inst.mu;
  }
  const auto pi = stationary_newest_counts(inst, price);
  double mean = 0.0;
  for (std::size_t n = 0; n < pi.size(); ++n) {
    mean += static_cast<double>(n) * pi[n];
  }
  return mean;
}

namespace {

// Shared enumeration for the two dynamic revenue formulas. CountTable and
// Static policies collapse to c+1 count terms; StateTable policies walk all
// 2^c states with weight mu^N (1-mu)^(c-N).
template <class Visit>
void for_each_policy_state(const Instance& inst, const PricingPolicy& policy,
                           Visit&& visit) {
  if (!policy.depends_on_state_bits()) {
    validate_policy(policy, inst.c);
    const auto w = binomial_weights(inst.c, inst.mu);
    for (int n = 0; n <= inst.c; ++n) {
      const double price = policy.price_for_count(n);
      visit(w[static_cast<std::size_t>(n)], price,
            purchase_prob(inst, n, price));
    }
    return;
  }
  validate_policy(policy, inst.c);
  if (inst.c > kMaxEnumerableC) {
    throw InvalidPolicy("state enumeration limited to c <= 20");
  }
  const double log_mu = std::log(inst.mu);
  const double log_1mu = std::log1p(-inst.mu);
  const std::uint64_t n_states = std::uint64_t{1} << inst.c;
  for (std::uint64_t s = 0; s < n_states; ++s) {
    const int n = std::popcount(s);
    const double weight = std::exp(n * log_mu + (inst.c - n) * log_1mu);
    const double price = policy.price_for_state(s, n);
    visit(weight, price, purchase_prob(inst, n, price));
  }
}

}  // namespace

double rev_newest_dynamic(const Instance& inst, const PricingPolicy& policy) {
  double mean_price = 0.0;
  double mean_inv_q = 0.0;
  bool absorbing = false;
  for_each_policy_state(inst, policy, [&](double w, double price, double q) {
    mean_price += w * price;
    if (!(q > kAbsorbingEps)) {
      absorbing = true;
    } else {
      mean_inv_q += w / q;
    }
  });
  if (absorbing) {
    throw AbsorbingState("pricing policy leaves a state with no sales");
  }
  return mean_price / mean_inv_q;
}

double rev_random_dynamic(const Instance& inst, const PricingPolicy& policy) {
  double rev = 0.0;
  for_each_policy_state(inst, policy, [&](double w, double price, double q) {
    rev += w * price * q;
  });
  return rev;
}

double rev_known_quality(const Instance& inst, double price) {
  return price * survival(inst.dist, price - inst.mu);
}

std::vector<double> window_inverse_rates(const Instance& inst, int w,
                                         double price) {
  if (w < inst.c) throw InvalidParams("window must be at least c");
  // Average purchase probability at k window-positives; the c displayed
  // counts are hypergeometric within the window.
  std::vector<double> iota(static_cast<std::size_t>(w) + 1);
  for (int k = 0; k <= w; ++k) {
    double qk = 0.0;
    const int n_lo = std::max(0, inst.c + k - w);
    const int n_hi = std::min(inst.c, k);
    for (int n = n_lo; n <= n_hi; ++n) {
      const double log_p = lchoose(inst.c, n) + lchoose(w - inst.c, k - n) -
                           lchoose(w, k);
      qk += purchase_prob(inst, n, price) * std::exp(log_p);
    }
    if (!(qk > kAbsorbingEps)) {
      throw AbsorbingPrice("price leaves a window state with no sales");
    }
    iota[static_cast<std::size_t>(k)] = 1.0 / qk;
  }
  return iota;
}

double window_revenue(const Instance& inst, int w, double price) {
  const auto iota = window_inverse_rates(inst, w, price);
  const auto weights = binomial_weights(w, inst.mu);
  const double inv_kappa =
      kernels::dot(weights.data(), iota.data(), weights.size());
  return price / inv_kappa;
}

double NsSteadyReport::belief_error_newest() const {
  if (!belief_error_newest_opt) {
    throw NotCalibrated(
        "belief error requires h(0) = muL and h(1) = muH exactly");
  }
  return *belief_error_newest_opt;
}

double NsSteadyReport::belief_error_random() const {
  if (!belief_error_random_opt) {
    throw NotCalibrated(
        "belief error requires h(0) = muL and h(1) = muH exactly");
  }
  return *belief_error_random_opt;
}

NsSteadyReport ns_steady(double mu_l, double mu_h, double xi, double price,
                         const Instance& base) {
  if (!(0 < mu_l) || !(mu_l < mu_h) || !(mu_h < 1)) {
    throw InvalidParams("need 0 < mu_l < mu_h < 1");
  }
  if (!(xi > 0 && xi <= 1)) throw InvalidParams("xi must lie in (0,1]");
  if (base.c != 1) throw InvalidParams("two-point quality model needs c = 1");
  const double q0 = purchase_prob(base, 0, price);
  const double q1 = purchase_prob(base, 1, price);
  if (!(q0 > kAbsorbingEps)) throw InvalidParams("price is absorbing");
  if (!(q1 > q0)) throw InvalidParams("price must be non-degenerate");

  const double a_h = 1.0 - ((1.0 - mu_h) * q1 + mu_h * q0);
  const double a_l = 1.0 - ((1.0 - mu_l) * q1 + mu_l * q0);
  const double denom =
      (2.0 - (2.0 - xi) * a_h) * (2.0 - (2.0 - xi) * a_l) - xi * xi * a_h * a_l;

  NsSteadyReport r;
  const double pi_0h =
      q1 *
      (2.0 * (1.0 - mu_h) * a_l * (xi - 1.0) + (1.0 - mu_l) * xi +
       (1.0 - mu_h) * (2.0 - xi)) /
      denom;
  const double pi_0l =
      q1 *
      (2.0 * (1.0 - mu_l) * a_h * (xi - 1.0) + (1.0 - mu_h) * xi +
       (1.0 - mu_l) * (2.0 - xi)) /
      denom;
  // Each quality level carries half the stationary mass.
  r.pi = {pi_0l, 0.5 - pi_0l, pi_0h, 0.5 - pi_0h};

  r.rev_newest = price * (q0 * (pi_0l + pi_0h) + q1 * (1.0 - pi_0l - pi_0h));
  const double mean_mu = 0.5 * (mu_l + mu_h);
  r.rev_random = price * (q0 * (1.0 - mean_mu) + q1 * mean_mu);

  const bool calibrated = std::abs(base.h(0) - mu_l) <= 1e-12 &&
                          std::abs(base.h(1) - mu_h) <= 1e-12;
  if (calibrated) {
    const double delta = mu_h - mu_l;
    const double g = (xi - 1.0) / denom;
    const double random_err = delta * delta / 2.0;
    r.belief_error_random_opt = random_err;
    r.belief_error_newest_opt =
        2.0 * q1 * q0 * delta * delta * delta * g + random_err;
  }
  return r;
}

}  // namespace conflab
