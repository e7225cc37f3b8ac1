#pragma once

// Idiosyncratic valuation distributions F and the single-customer
// revenue-maximization primitive r*(Theta + shift).

#include <cstdint>
#include <utility>

#include "conflab/errors.hpp"

namespace conflab {

struct ValuationDistribution {
  enum class Kind { Uniform, Exponential, Normal, Bernoulli };

  Kind kind = Kind::Uniform;
  // Uniform: lo, hi. Exponential: rate. Normal: mean, sd.
  // Bernoulli: success_prob, on_value, off_value (off < on).
  double lo = 0.0, hi = 1.0;
  double rate = 1.0;
  double mean = 0.0, sd = 1.0;
  double success_prob = 0.5, on_value = 1.0, off_value = 0.0;

  static ValuationDistribution uniform(double lo, double hi);
  static ValuationDistribution exponential(double rate);
  static ValuationDistribution normal(double mean, double sd);
  static ValuationDistribution bernoulli(double success_prob,
                                         double on_value = 1.0,
                                         double off_value = 0.0);
};

// P[Theta >= x], exact closed form per kind.
double survival(const ValuationDistribution& dist, double x);

// Tight support interval; +-inf for unbounded kinds.
std::pair<double, double> support(const ValuationDistribution& dist);

// Smallest x with survival(x) <= eps; used to truncate unbounded supports.
double upper_quantile(const ValuationDistribution& dist, double eps);

// Inverse-CDF draw from a canonical uniform in [0,1).
double sample_from_uniform(const ValuationDistribution& dist, double u01);

// Draw using any 64-bit URBG (the canonical uniform is (g() >> 11) * 2^-53,
// pinned here so results do not depend on the standard library).
template <class URBG>
double sample(const ValuationDistribution& dist, URBG& g) {
  const double u =
      static_cast<double>(static_cast<std::uint64_t>(g()) >> 11) * 0x1.0p-53;
  return sample_from_uniform(dist, u);
}

struct MyersonResult {
  double price = 0.0;
  double revenue = 0.0;
  double quantile = 0.0;  // purchase probability at the optimal price
};

// argmax_p p * P[Theta + shift >= p] and its value. Uniform, Exponential and
// Bernoulli use exact closed forms; Normal is solved numerically. Ties break
// toward the lowest price. Throws NoPositiveRevenue when no price earns a
// positive amount.
MyersonResult myerson(const ValuationDistribution& dist, double shift);

// Grid + golden-section solver used for Normal and as a cross-check oracle
// for the closed forms.
MyersonResult myerson_numeric(const ValuationDistribution& dist, double shift);

}  // namespace conflab
