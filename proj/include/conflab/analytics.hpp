#pragma once

// Closed-form steady-state quantities: revenues, CoNF, stationary counts,
// window-random rates, the two-point quality model, and the known-quality
// benchmark.

#include <array>
#include <optional>
#include <vector>

#include "conflab/model.hpp"

namespace conflab {

enum class Ordering { Newest, Random };

struct ConfReport {
  double rev_random = 0.0;
  double rev_newest = 0.0;
  double chi = 0.0;
  double beta = 0.0;  // NaN for pricing-class reports, where no single price exists
  bool non_degenerate = false;
};

// p * E_{N~Bin(c,mu)}[P[Theta + h(N) >= p]].
double rev_random_static(const Instance& inst, double price);

// p / E_{N~Bin(c,mu)}[1 / P[Theta + h(N) >= p]]; throws AbsorbingPrice when
// some review state cannot sell.
double rev_newest_static(const Instance& inst, double price);

// CoNF at a fixed price. chi is evaluated through the explicit double sum
// over count pairs and cross-checked against rev_random/rev_newest.
ConfReport conf_static(const Instance& inst, double price);

// beta(p) = q(c)/q(0).
double beta_ratio(const Instance& inst, double price);

// Stationary distribution over the number of displayed positives under
// Newest-First: pi_n proportional to C(c,n) mu^n (1-mu)^(c-n) / q(n).
std::vector<double> stationary_newest_counts(const Instance& inst, double price);

double expected_positive_reviews(const Instance& inst, double price,
                                 Ordering ordering);

// E[rho(Y)] / E[1 / P[Theta + h(N_Y) >= rho(Y)]] over Y ~ Bern(mu)^c.
double rev_newest_dynamic(const Instance& inst, const PricingPolicy& policy);

// E[rho(Z) * P[Theta + h(N_Z) >= rho(Z)]] over Z ~ Bern(mu)^c.
double rev_random_dynamic(const Instance& inst, const PricingPolicy& policy);

// p * P[Theta + mu >= p]: selling when reviews reveal the true quality.
double rev_known_quality(const Instance& inst, double price);

// Revenue of the uniform window-random ordering with window w >= c.
double window_revenue(const Instance& inst, int w, double price);

// Inverse purchase rates iota_k, k = 0..w (expected rounds spent per visit at
// k positives in the window).
std::vector<double> window_inverse_rates(const Instance& inst, int w,
                                         double price);

// Steady state of the two-point quality model (c = 1). pi is ordered
// (review 0, muL), (1, muL), (0, muH), (1, muH).
struct NsSteadyReport {
  std::array<double, 4> pi{};
  double rev_newest = 0.0;
  double rev_random = 0.0;
  // Present only when the estimator is calibrated: h(0) = muL, h(1) = muH.
  std::optional<double> belief_error_newest_opt;
  std::optional<double> belief_error_random_opt;

  double belief_error_newest() const;
  double belief_error_random() const;
};

NsSteadyReport ns_steady(double mu_l, double mu_h, double xi, double price,
                         const Instance& base);

}  // namespace conflab
