// Scalar reference kernels. These define the exact arithmetic the AVX2
// variants must reproduce: 4 striped accumulators, std::fma for every
// multiply-add, combine order (acc0+acc2)+(acc1+acc3), scalar tail appended
// to the combined sum.

#include <cmath>

#include "conflab/kernels.hpp"

namespace conflab::kernels::scalar {

void philox_many(PhiloxKey key, const PhiloxCtr* ctrs, PhiloxBlock* out,
                 std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = philox4x32(key, ctrs[i]);
}

double dot(const double* w, const double* x, std::size_t n) {
  double acc0 = 0.0, acc1 = 0.0, acc2 = 0.0, acc3 = 0.0;
  std::size_t k = 0;
  for (; k + 4 <= n; k += 4) {
    acc0 = std::fma(w[k + 0], x[k + 0], acc0);
    acc1 = std::fma(w[k + 1], x[k + 1], acc1);
    acc2 = std::fma(w[k + 2], x[k + 2], acc2);
    acc3 = std::fma(w[k + 3], x[k + 3], acc3);
  }
  double s = (acc0 + acc2) + (acc1 + acc3);
  for (; k < n; ++k) s = std::fma(w[k], x[k], s);
  return s;
}

double recip_dot(const double* w, const double* q, std::size_t n) {
  double acc0 = 0.0, acc1 = 0.0, acc2 = 0.0, acc3 = 0.0;
  std::size_t k = 0;
  for (; k + 4 <= n; k += 4) {
    acc0 += w[k + 0] / q[k + 0];
    acc1 += w[k + 1] / q[k + 1];
    acc2 += w[k + 2] / q[k + 2];
    acc3 += w[k + 3] / q[k + 3];
  }
  double s = (acc0 + acc2) + (acc1 + acc3);
  for (; k < n; ++k) s += w[k] / q[k];
  return s;
}

double cross_sum(const double* a, const double* b, std::size_t n) {
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double ai = a[i];
    double acc0 = 0.0, acc1 = 0.0, acc2 = 0.0, acc3 = 0.0;
    std::size_t k = 0;
    for (; k + 4 <= n; k += 4) {
      acc0 = std::fma(ai, b[k + 0], acc0);
      acc1 = std::fma(ai, b[k + 1], acc1);
      acc2 = std::fma(ai, b[k + 2], acc2);
      acc3 = std::fma(ai, b[k + 3], acc3);
    }
    double row = (acc0 + acc2) + (acc1 + acc3);
    for (; k < n; ++k) row = std::fma(ai, b[k], row);
    total += row;
  }
  return total;
}

void grid_static_revenue_uniform(double p0, double dp, std::size_t np,
                                 const double* weights, const double* thresholds,
                                 std::size_t m, double inv_range, bool newest,
                                 double* rev_out) {
  for (std::size_t i = 0; i < np; ++i) {
    const double p = std::fma(static_cast<double>(i), dp, p0);
    double acc = 0.0;
    // Clamp written as MINPD-then-MAXPD so the vector path matches bit for
    // bit (ties select the second operand).
    if (newest) {
      for (std::size_t n = 0; n < m; ++n) {
        double s = (thresholds[n] - p) * inv_range;
        s = (s < 1.0) ? s : 1.0;
        s = (s > 0.0) ? s : 0.0;
        acc += weights[n] / s;
      }
      rev_out[i] = p / acc;
    } else {
      for (std::size_t n = 0; n < m; ++n) {
        double s = (thresholds[n] - p) * inv_range;
        s = (s < 1.0) ? s : 1.0;
        s = (s > 0.0) ? s : 0.0;
        acc = std::fma(weights[n], s, acc);
      }
      rev_out[i] = p * acc;
    }
  }
}

}  // namespace conflab::kernels::scalar
