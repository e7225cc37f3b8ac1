// Runtime backend selection for the kernels.

#include "conflab/kernels.hpp"

#include <atomic>
#include <stdexcept>

namespace conflab::kernels {

namespace scalar {
void philox_many(PhiloxKey, const PhiloxCtr*, PhiloxBlock*, std::size_t);
double dot(const double*, const double*, std::size_t);
double recip_dot(const double*, const double*, std::size_t);
double cross_sum(const double*, const double*, std::size_t);
void grid_static_revenue_uniform(double, double, std::size_t, const double*,
                                 const double*, std::size_t, double, bool,
                                 double*);
}  // namespace scalar

#if defined(__x86_64__) || defined(_M_X64)
namespace avx2 {
void philox_many(PhiloxKey, const PhiloxCtr*, PhiloxBlock*, std::size_t);
double dot(const double*, const double*, std::size_t);
double recip_dot(const double*, const double*, std::size_t);
double cross_sum(const double*, const double*, std::size_t);
void grid_static_revenue_uniform(double, double, std::size_t, const double*,
                                 const double*, std::size_t, double, bool,
                                 double*);
}  // namespace avx2
#endif

namespace {

bool detect_avx2() {
#if defined(__x86_64__) || defined(_M_X64)
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

std::atomic<int> g_forced{-1};  // -1 auto, else Backend value

Backend resolve() {
  const int forced = g_forced.load(std::memory_order_relaxed);
  if (forced >= 0) return static_cast<Backend>(forced);
  static const bool has_avx2 = detect_avx2();
  return has_avx2 ? Backend::Avx2 : Backend::Scalar;
}

}  // namespace

bool avx2_supported() { return detect_avx2(); }

Backend active_backend() { return resolve(); }

void force_backend(Backend b) {
  if (b == Backend::Avx2 && !detect_avx2()) {
    throw std::runtime_error("AVX2 backend not supported on this CPU");
  }
  g_forced.store(static_cast<int>(b), std::memory_order_relaxed);
}

void reset_backend() { g_forced.store(-1, std::memory_order_relaxed); }

void philox_many(PhiloxKey key, const PhiloxCtr* ctrs, PhiloxBlock* out,
                 std::size_t n) {
#if defined(__x86_64__) || defined(_M_X64)
  if (resolve() == Backend::Avx2) return avx2::philox_many(key, ctrs, out, n);
#endif
  scalar::philox_many(key, ctrs, out, n);
}

double dot(const double* w, const double* x, std::size_t n) {
#if defined(__x86_64__) || defined(_M_X64)
  if (resolve() == Backend::Avx2) return avx2::dot(w, x, n);
#endif
  return scalar::dot(w, x, n);
}

double recip_dot(const double* w, const double* q, std::size_t n) {
#if defined(__x86_64__) || defined(_M_X64)
  if (resolve() == Backend::Avx2) return avx2::recip_dot(w, q, n);
#endif
  return scalar::recip_dot(w, q, n);
}

double cross_sum(const double* a, const double* b, std::size_t n) {
#if defined(__x86_64__) || defined(_M_X64)
  if (resolve() == Backend::Avx2) return avx2::cross_sum(a, b, n);
#endif
  return scalar::cross_sum(a, b, n);
}

void grid_static_revenue_uniform(double p0, double dp, std::size_t np,
                                 const double* weights, const double* thresholds,
                                 std::size_t m, double inv_range, bool newest,
                                 double* rev_out) {
#if defined(__x86_64__) || defined(_M_X64)
  if (resolve() == Backend::Avx2) {
    return avx2::grid_static_revenue_uniform(p0, dp, np, weights, thresholds, m,
                                             inv_range, newest, rev_out);
  }
#endif
  scalar::grid_static_revenue_uniform(p0, dp, np, weights, thresholds, m,
                                      inv_range, newest, rev_out);
}

}  // namespace conflab::kernels
