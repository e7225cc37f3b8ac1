#pragma once

// Data-parallel inner loops used by the analytics and the simulator.
//
// Every kernel has a scalar reference implementation and, on x86-64, an AVX2
// variant selected at runtime. The two paths are bit-identical: the scalar
// code is written with the same lane structure (4 striped accumulators,
// fused multiply-add, fixed combine order) that the vector code uses, and the
// Philox generator is pure integer arithmetic.

#include <cstddef>
#include <cstdint>

namespace conflab::kernels {

enum class Backend { Scalar, Avx2 };

// Backend actually in use (auto-detected unless forced).
Backend active_backend();
bool avx2_supported();

// Force a backend for equivalence tests; Scalar always works, forcing Avx2 on
// a machine without it throws. Call reset_backend() to return to auto.
void force_backend(Backend b);
void reset_backend();

// ---------------------------------------------------------------------------
// Philox4x32-10 counter-based generator (Salmon et al. constants).
// ---------------------------------------------------------------------------

struct PhiloxKey {
  std::uint32_t k0, k1;
};

struct PhiloxCtr {
  std::uint32_t c0, c1, c2, c3;
};

struct PhiloxBlock {
  std::uint32_t x0, x1, x2, x3;
};

namespace detail {
constexpr std::uint32_t kPhiloxM0 = 0xD2511F53u;
constexpr std::uint32_t kPhiloxM1 = 0xCD9E8D57u;
constexpr std::uint32_t kPhiloxW0 = 0x9E3779B9u;
constexpr std::uint32_t kPhiloxW1 = 0xBB67AE85u;
}  // namespace detail

// Single-block scalar reference, usable from headers and constexpr-friendly.
inline PhiloxBlock philox4x32(PhiloxKey key, PhiloxCtr ctr) {
  std::uint32_t x0 = ctr.c0, x1 = ctr.c1, x2 = ctr.c2, x3 = ctr.c3;
  std::uint32_t k0 = key.k0, k1 = key.k1;
  for (int r = 0; r < 10; ++r) {
    const std::uint64_t p0 = static_cast<std::uint64_t>(detail::kPhiloxM0) * x0;
    const std::uint64_t p1 = static_cast<std::uint64_t>(detail::kPhiloxM1) * x2;
    const std::uint32_t hi0 = static_cast<std::uint32_t>(p0 >> 32);
    const std::uint32_t lo0 = static_cast<std::uint32_t>(p0);
    const std::uint32_t hi1 = static_cast<std::uint32_t>(p1 >> 32);
    const std::uint32_t lo1 = static_cast<std::uint32_t>(p1);
    x0 = hi1 ^ x1 ^ k0;
    x1 = lo1;
    x2 = hi0 ^ x3 ^ k1;
    x3 = lo0;
    k0 += detail::kPhiloxW0;
    k1 += detail::kPhiloxW1;
  }
  return PhiloxBlock{x0, x1, x2, x3};
}

// Batch generation; dispatched.
void philox_many(PhiloxKey key, const PhiloxCtr* ctrs, PhiloxBlock* out,
                 std::size_t n);

// 53-bit uniform in [0,1) from the first two words of a block.
inline double block_to_unit_double(const PhiloxBlock& b) {
  const std::uint64_t u =
      (static_cast<std::uint64_t>(b.x0) << 32) | static_cast<std::uint64_t>(b.x1);
  return static_cast<double>(u >> 11) * 0x1.0p-53;
}

inline std::uint64_t block_to_u64(const PhiloxBlock& b) {
  return (static_cast<std::uint64_t>(b.x0) << 32) |
         static_cast<std::uint64_t>(b.x1);
}

// ---------------------------------------------------------------------------
// Weighted reductions over double arrays.
// ---------------------------------------------------------------------------

// sum_i w[i] * x[i]
double dot(const double* w, const double* x, std::size_t n);

// sum_i w[i] / q[i]  (q[i] == 0 yields +inf, which callers rely on)
double recip_dot(const double* w, const double* q, std::size_t n);

// Literal double sum: sum_i sum_j a[i] * b[j], accumulated row by row.
double cross_sum(const double* a, const double* b, std::size_t n);

// ---------------------------------------------------------------------------
// Static-price revenue scan for Uniform idiosyncratic valuations.
//
// For grid prices p_i = p0 + i*dp, with per-count weights w_n and survival
// thresholds t_n = f_hi + h(n):
//   survival_n(p) = clamp((t_n - p) * inv_range, 0, 1)
//   random:  rev_i = p_i * sum_n w_n * survival_n(p_i)
//   newest:  rev_i = p_i / sum_n w_n / survival_n(p_i)   (absorbing -> 0)
// ---------------------------------------------------------------------------

void grid_static_revenue_uniform(double p0, double dp, std::size_t np,
                                 const double* weights, const double* thresholds,
                                 std::size_t m, double inv_range, bool newest,
                                 double* rev_out);

}  // namespace conflab::kernels
