// AVX2 variants of the kernels. Compiled with -mavx2 -mfma on x86-64 only;
// selected at runtime after a cpuid check. Each output element is computed
// with the same per-lane operations as the scalar reference, so results are
// bit-identical.

#if defined(__x86_64__) || defined(_M_X64)

#include <immintrin.h>

#include <cmath>

#include "conflab/kernels.hpp"

namespace conflab::kernels::avx2 {

namespace {

// 32x32 -> 32:32 multiply across 8 packed u32 lanes.
inline void mulhilo_epu32(__m256i x, __m256i m, __m256i& lo, __m256i& hi) {
  const __m256i even = _mm256_mul_epu32(x, m);
  const __m256i odd = _mm256_mul_epu32(_mm256_srli_epi64(x, 32), m);
  lo = _mm256_blend_epi32(even, _mm256_slli_epi64(odd, 32), 0xAA);
  hi = _mm256_blend_epi32(_mm256_srli_epi64(even, 32), odd, 0xAA);
}

inline double hsum(__m256d acc) {
  const __m128d lo = _mm256_castpd256_pd128(acc);
  const __m128d hi = _mm256_extractf128_pd(acc, 1);
  const __m128d sum2 = _mm_add_pd(lo, hi);  // {acc0+acc2, acc1+acc3}
  return _mm_cvtsd_f64(sum2) + _mm_cvtsd_f64(_mm_unpackhi_pd(sum2, sum2));
}

}  // namespace

void philox_many(PhiloxKey key, const PhiloxCtr* ctrs, PhiloxBlock* out,
                 std::size_t n) {
  const __m256i m0 = _mm256_set1_epi32(static_cast<int>(detail::kPhiloxM0));
  const __m256i m1 = _mm256_set1_epi32(static_cast<int>(detail::kPhiloxM1));
  const __m256i w0 = _mm256_set1_epi32(static_cast<int>(detail::kPhiloxW0));
  const __m256i w1 = _mm256_set1_epi32(static_cast<int>(detail::kPhiloxW1));

  std::size_t i = 0;
  alignas(32) std::uint32_t lane[4][8];
  for (; i + 8 <= n; i += 8) {
    for (int j = 0; j < 8; ++j) {
      lane[0][j] = ctrs[i + j].c0;
      lane[1][j] = ctrs[i + j].c1;
      lane[2][j] = ctrs[i + j].c2;
      lane[3][j] = ctrs[i + j].c3;
    }
    __m256i x0 = _mm256_load_si256(reinterpret_cast<const __m256i*>(lane[0]));
    __m256i x1 = _mm256_load_si256(reinterpret_cast<const __m256i*>(lane[1]));
    __m256i x2 = _mm256_load_si256(reinterpret_cast<const __m256i*>(lane[2]));
    __m256i x3 = _mm256_load_si256(reinterpret_cast<const __m256i*>(lane[3]));
    __m256i k0 = _mm256_set1_epi32(static_cast<int>(key.k0));
    __m256i k1 = _mm256_set1_epi32(static_cast<int>(key.k1));
    for (int r = 0; r < 10; ++r) {
      __m256i lo0, hi0, lo1, hi1;
      mulhilo_epu32(x0, m0, lo0, hi0);
      mulhilo_epu32(x2, m1, lo1, hi1);
      const __m256i n0 = _mm256_xor_si256(_mm256_xor_si256(hi1, x1), k0);
      const __m256i n2 = _mm256_xor_si256(_mm256_xor_si256(hi0, x3), k1);
      x0 = n0;
      x1 = lo1;
      x2 = n2;
      x3 = lo0;
      k0 = _mm256_add_epi32(k0, w0);
      k1 = _mm256_add_epi32(k1, w1);
    }
    _mm256_store_si256(reinterpret_cast<__m256i*>(lane[0]), x0);
    _mm256_store_si256(reinterpret_cast<__m256i*>(lane[1]), x1);
    _mm256_store_si256(reinterpret_cast<__m256i*>(lane[2]), x2);
    _mm256_store_si256(reinterpret_cast<__m256i*>(lane[3]), x3);
    for (int j = 0; j < 8; ++j) {
      out[i + j] = PhiloxBlock{lane[0][j], lane[1][j], lane[2][j], lane[3][j]};
    }
  }
  for (; i < n; ++i) out[i] = philox4x32(key, ctrs[i]);
}

double dot(const double* w, const double* x, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t k = 0;
  for (; k + 4 <= n; k += 4) {
    acc = _mm256_fmadd_pd(_mm256_loadu_pd(w + k), _mm256_loadu_pd(x + k), acc);
  }
  double s = hsum(acc);
  for (; k < n; ++k) s = std::fma(w[k], x[k], s);
  return s;
}

double recip_dot(const double* w, const double* q, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t k = 0;
  for (; k + 4 <= n; k += 4) {
    acc = _mm256_add_pd(
        _mm256_div_pd(_mm256_loadu_pd(w + k), _mm256_loadu_pd(q + k)), acc);
  }
  double s = hsum(acc);
  for (; k < n; ++k) s += w[k] / q[k];
  return s;
}

double cross_sum(const double* a, const double* b, std::size_t n) {
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const __m256d ai = _mm256_set1_pd(a[i]);
    __m256d acc = _mm256_setzero_pd();
    std::size_t k = 0;
    for (; k + 4 <= n; k += 4) {
      acc = _mm256_fmadd_pd(ai, _mm256_loadu_pd(b + k), acc);
    }
    double row = hsum(acc);
    for (; k < n; ++k) row = std::fma(a[i], b[k], row);
    total += row;
  }
  return total;
}

void grid_static_revenue_uniform(double p0, double dp, std::size_t np,
                                 const double* weights, const double* thresholds,
                                 std::size_t m, double inv_range, bool newest,
                                 double* rev_out) {
  const __m256d vdp = _mm256_set1_pd(dp);
  const __m256d vp0 = _mm256_set1_pd(p0);
  const __m256d vinv = _mm256_set1_pd(inv_range);
  const __m256d one = _mm256_set1_pd(1.0);
  const __m256d zero = _mm256_setzero_pd();

  std::size_t i = 0;
  for (; i + 4 <= np; i += 4) {
    const __m256d idx = _mm256_set_pd(static_cast<double>(i + 3),
                                      static_cast<double>(i + 2),
                                      static_cast<double>(i + 1),
                                      static_cast<double>(i));
    const __m256d p = _mm256_fmadd_pd(idx, vdp, vp0);
    __m256d acc = zero;
    for (std::size_t n = 0; n < m; ++n) {
      const __m256d t = _mm256_set1_pd(thresholds[n]);
      __m256d s = _mm256_mul_pd(_mm256_sub_pd(t, p), vinv);
      s = _mm256_min_pd(s, one);
      s = _mm256_max_pd(s, zero);
      const __m256d wn = _mm256_set1_pd(weights[n]);
      if (newest) {
        acc = _mm256_add_pd(_mm256_div_pd(wn, s), acc);
      } else {
        acc = _mm256_fmadd_pd(wn, s, acc);
      }
    }
    const __m256d rev = newest ? _mm256_div_pd(p, acc) : _mm256_mul_pd(p, acc);
    _mm256_storeu_pd(rev_out + i, rev);
  }
  for (; i < np; ++i) {
    const double p = std::fma(static_cast<double>(i), dp, p0);
    double acc = 0.0;
    for (std::size_t n = 0; n < m; ++n) {
      double s = (thresholds[n] - p) * inv_range;
      s = (s < 1.0) ? s : 1.0;
      s = (s > 0.0) ? s : 0.0;
      if (newest) {
        acc += weights[n] / s;
      } else {
        acc = std::fma(weights[n], s, acc);
      }
    }
    rev_out[i] = newest ? p / acc : p * acc;
  }
}

}  // namespace conflab::kernels::avx2

#endif  // x86-64
