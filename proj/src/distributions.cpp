#include "conflab/distributions.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <boost/math/special_functions/erf.hpp>

namespace conflab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_finite(double v, const char* what) {
  if (!std::isfinite(v)) {
    throw InvalidDistribution(std::string(what) + " must be finite");
  }
}

}  // namespace

ValuationDistribution ValuationDistribution::uniform(double lo, double hi) {
  check_finite(lo, "uniform lo");
  check_finite(hi, "uniform hi");
  if (!(lo < hi)) throw InvalidDistribution("uniform requires lo < hi");
  ValuationDistribution d;
  d.kind = Kind::Uniform;
  d.lo = lo;
  d.hi = hi;
  return d;
}

ValuationDistribution ValuationDistribution::exponential(double rate) {
  check_finite(rate, "exponential rate");
  if (!(rate > 0)) throw InvalidDistribution("exponential requires rate > 0");
  ValuationDistribution d;
  d.kind = Kind::Exponential;
  d.rate = rate;
  return d;
}

ValuationDistribution ValuationDistribution::normal(double mean, double sd) {
  check_finite(mean, "normal mean");
  check_finite(sd, "normal sd");
  if (!(sd > 0)) throw InvalidDistribution("normal requires sd > 0");
  ValuationDistribution d;
  d.kind = Kind::Normal;
  d.mean = mean;
  d.sd = sd;
  return d;
}

ValuationDistribution ValuationDistribution::bernoulli(double success_prob,
                                                       double on_value,
                                                       double off_value) {
  check_finite(success_prob, "bernoulli success_prob");
  check_finite(on_value, "bernoulli on_value");
  check_finite(off_value, "bernoulli off_value");
  if (success_prob < 0 || success_prob > 1) {
    throw InvalidDistribution("bernoulli requires success_prob in [0,1]");
  }
  if (!(off_value < on_value)) {
    throw InvalidDistribution("bernoulli requires off_value < on_value");
  }
  ValuationDistribution d;
  d.kind = Kind::Bernoulli;
  d.success_prob = success_prob;
  d.on_value = on_value;
  d.off_value = off_value;
  return d;
}

double survival(const ValuationDistribution& dist, double x) {
  switch (dist.kind) {
    case ValuationDistribution::Kind::Uniform:
      if (x <= dist.lo) return 1.0;
      if (x >= dist.hi) return 0.0;
      return (dist.hi - x) / (dist.hi - dist.lo);
    case ValuationDistribution::Kind::Exponential:
      if (x <= 0.0) return 1.0;
      return std::exp(-dist.rate * x);
    case ValuationDistribution::Kind::Normal:
      return 0.5 * std::erfc((x - dist.mean) / (dist.sd * std::sqrt(2.0)));
    case ValuationDistribution::Kind::Bernoulli:
      if (x <= dist.off_value) return 1.0;
      if (x <= dist.on_value) return dist.success_prob;
      return 0.0;
  }
  return 0.0;
}

std::pair<double, double> support(const ValuationDistribution& dist) {
  switch (dist.kind) {
    case ValuationDistribution::Kind::Uniform:
      return {dist.lo, dist.hi};
    case ValuationDistribution::Kind::Exponential:
      return {0.0, kInf};
    case ValuationDistribution::Kind::Normal:
      return {-kInf, kInf};
    case ValuationDistribution::Kind::Bernoulli:
      return {dist.off_value, dist.on_value};
  }
  return {0.0, 0.0};
}

double upper_quantile(const ValuationDistribution& dist, double eps) {
  switch (dist.kind) {
    case ValuationDistribution::Kind::Uniform:
      return dist.hi;
    case ValuationDistribution::Kind::Exponential:
      return -std::log(eps) / dist.rate;
    case ValuationDistribution::Kind::Normal:
      // survival(x) = eps  <=>  x = mean + sd*sqrt(2)*erfc_inv(2*eps)
      return dist.mean +
             dist.sd * std::sqrt(2.0) * boost::math::erfc_inv(2.0 * eps);
    case ValuationDistribution::Kind::Bernoulli:
      return dist.success_prob > eps ? dist.on_value : dist.off_value;
  }
  return 0.0;
}

double sample_from_uniform(const ValuationDistribution& dist, double u) {
  switch (dist.kind) {
    case ValuationDistribution::Kind::Uniform:
      return dist.lo + u * (dist.hi - dist.lo);
    case ValuationDistribution::Kind::Exponential:
      return -std::log1p(-u) / dist.rate;
    case ValuationDistribution::Kind::Normal: {
      // Phi^{-1}(u) = -sqrt(2) * erfc_inv(2u); u in (0,1).
      const double uu = std::clamp(u, 0x1.0p-60, 1.0 - 0x1.0p-53);
      return dist.mean -
             dist.sd * std::sqrt(2.0) * boost::math::erfc_inv(2.0 * uu);
    }
    case ValuationDistribution::Kind::Bernoulli:
      return u < dist.success_prob ? dist.on_value : dist.off_value;
  }
  return 0.0;
}

namespace {

MyersonResult make_result(const ValuationDistribution& dist, double shift,
                          double price) {
  MyersonResult r;
  r.price = price;
  r.quantile = survival(dist, price - shift);
  r.revenue = price * r.quantile;
  return r;
}

MyersonResult myerson_uniform(const ValuationDistribution& dist, double shift) {
  // V = Theta + shift = U[0, A] + x with A = hi - lo, x = lo + shift.
  const double A = dist.hi - dist.lo;
  const double x = dist.lo + shift;
  if (!(A + x > 0)) {
    throw NoPositiveRevenue("no positive price sells with positive revenue");
  }
  const double price = (std::max(x, A) + x) / 2.0;
  MyersonResult r = make_result(dist, shift, price);
  // Exact value; make_result already agrees but keep the stable form.
  r.revenue = (std::max(A, x) + x) * (std::max(A, x) + x) / (4.0 * std::max(A, x));
  return r;
}

MyersonResult myerson_exponential(const ValuationDistribution& dist,
                                  double shift) {
  // p*exp(-rate*(p-shift)) peaks at p = 1/rate; below shift the survival
  // saturates at 1, so the price never drops under the shift.
  const double price = std::max(shift, 1.0 / dist.rate);
  return make_result(dist, shift, price);
}

MyersonResult myerson_bernoulli(const ValuationDistribution& dist,
                                double shift) {
  const double p_low = dist.off_value + shift;   // sells to everyone
  const double p_high = dist.on_value + shift;   // sells to the atom at on_value
  const double rev_low = p_low > 0 ? p_low : 0.0;
  const double rev_high = p_high > 0 ? p_high * dist.success_prob : 0.0;
  if (rev_low <= 0 && rev_high <= 0) {
    throw NoPositiveRevenue("no positive price sells with positive revenue");
  }
  // Ties break toward the lowest price. Fill the fields directly: rebuilding
  // price - shift in floating point can fall off the atom.
  MyersonResult r;
  if (rev_high > rev_low) {
    r.price = p_high;
    r.quantile = dist.success_prob;
  } else {
    r.price = p_low;
    r.quantile = 1.0;
  }
  r.revenue = r.price * r.quantile;
  return r;
}

double golden_section_max(double lo, double hi, const auto& f, double& best_x,
                          double& best_f) {
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo, b = hi;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = f(c), fd = f(d);
  for (int it = 0; it < 200 && (b - a) > 1e-14 * std::max(1.0, std::abs(b));
       ++it) {
    if (fc >= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = f(d);
    }
  }
  // Return the best point actually evaluated; on ties prefer the lower price.
  if (fc > best_f || (fc == best_f && c < best_x)) {
    best_f = fc;
    best_x = c;
  }
  if (fd > best_f || (fd == best_f && d < best_x)) {
    best_f = fd;
    best_x = d;
  }
  return best_x;
}

}  // namespace

MyersonResult myerson_numeric(const ValuationDistribution& dist, double shift) {
  const auto [sup_lo, sup_hi] = support(dist);
  // Unbounded supports are truncated at the 1e-9 survival quantiles.
  const double hi_trunc =
      std::isfinite(sup_hi) ? sup_hi : upper_quantile(dist, 1e-9);
  double lo_trunc = sup_lo;
  if (!std::isfinite(lo_trunc)) {
    lo_trunc = dist.mean - (upper_quantile(dist, 1e-9) - dist.mean);
  }
  const double hi = hi_trunc + shift;
  const double lo = std::max(0.0, lo_trunc + shift);
  if (!(hi > 0)) {
    throw NoPositiveRevenue("no positive price sells with positive revenue");
  }
  const auto objective = [&](double p) { return p * survival(dist, p - shift); };

  constexpr int kGridPoints = 10000;
  const double step = (hi - lo) / (kGridPoints - 1);
  double best_x = lo, best_f = objective(lo);
  for (int i = 1; i < kGridPoints; ++i) {
    const double p = lo + i * step;
    const double v = objective(p);
    if (v > best_f) {
      best_f = v;
      best_x = p;
    }
  }
  const double bl = std::max(lo, best_x - step);
  const double bh = std::min(hi, best_x + step);
  golden_section_max(bl, bh, objective, best_x, best_f);
  if (!(best_f > 0)) {
    throw NoPositiveRevenue("no positive price sells with positive revenue");
  }
  return make_result(dist, shift, best_x);
}

MyersonResult myerson(const ValuationDistribution& dist, double shift) {
  if (!std::isfinite(shift)) throw InvalidParams("myerson shift must be finite");
  switch (dist.kind) {
    case ValuationDistribution::Kind::Uniform:
      return myerson_uniform(dist, shift);
    case ValuationDistribution::Kind::Exponential:
      return myerson_exponential(dist, shift);
    case ValuationDistribution::Kind::Bernoulli:
      return myerson_bernoulli(dist, shift);
    case ValuationDistribution::Kind::Normal:
      return myerson_numeric(dist, shift);
  }
  throw InvalidDistribution("unknown distribution kind");
}

}  // namespace conflab
