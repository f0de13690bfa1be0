// Compiled with -mavx2 -mfma; only reached after a runtime CPU check.
#include "ldec/simd/kernels.hpp"

#if defined(__x86_64__) && defined(__AVX2__) && defined(__FMA__)
#include <immintrin.h>

namespace ldec::simd::detail {
namespace {

inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

double sum_avx2(const double* x, std::size_t n) {
  __m256d a0 = _mm256_setzero_pd();
  __m256d a1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    a0 = _mm256_add_pd(a0, _mm256_loadu_pd(x + i));
    a1 = _mm256_add_pd(a1, _mm256_loadu_pd(x + i + 4));
  }
  for (; i + 4 <= n; i += 4) a0 = _mm256_add_pd(a0, _mm256_loadu_pd(x + i));
  double s = hsum(_mm256_add_pd(a0, a1));
  for (; i < n; ++i) s += x[i];
  return s;
}

double dot_avx2(const double* x, const double* y, std::size_t n) {
  __m256d a0 = _mm256_setzero_pd();
  __m256d a1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    a0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), a0);
    a1 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i + 4), _mm256_loadu_pd(y + i + 4), a1);
  }
  for (; i + 4 <= n; i += 4) a0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), a0);
  double s = hsum(_mm256_add_pd(a0, a1));
  for (; i < n; ++i) s += x[i] * y[i];
  return s;
}

Moments moments_avx2(const double* x, const double* y, std::size_t n, double mx, double my) {
  const __m256d vmx = _mm256_set1_pd(mx);
  const __m256d vmy = _mm256_set1_pd(my);
  __m256d sxx = _mm256_setzero_pd();
  __m256d syy = _mm256_setzero_pd();
  __m256d sxy = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d dx = _mm256_sub_pd(_mm256_loadu_pd(x + i), vmx);
    const __m256d dy = _mm256_sub_pd(_mm256_loadu_pd(y + i), vmy);
    sxx = _mm256_fmadd_pd(dx, dx, sxx);
    syy = _mm256_fmadd_pd(dy, dy, syy);
    sxy = _mm256_fmadd_pd(dx, dy, sxy);
  }
  Moments m{hsum(sxx), hsum(syy), hsum(sxy)};
  for (; i < n; ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    m.sxx += dx * dx;
    m.syy += dy * dy;
    m.sxy += dx * dy;
  }
  return m;
}

void axpy_avx2(double alpha, const double* x, double* y, std::size_t n) {
  const __m256d va = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(y + i, _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  }
  for (; i < n; ++i) y[i] += alpha * x[i];
}

// Vectorized over output positions; taps accumulate in ascending order like
// the scalar reference, so the two differ only by FMA rounding.
void correlate_valid_avx2(const double* signal, std::size_t n, const double* taps, std::size_t m, double* out) {
  if (m == 0 || m > n) return;
  const std::size_t n_out = n - m + 1;
  std::size_t i = 0;
  for (; i + 8 <= n_out; i += 8) {
    __m256d a0 = _mm256_setzero_pd();
    __m256d a1 = _mm256_setzero_pd();
    for (std::size_t k = 0; k < m; ++k) {
      const __m256d t = _mm256_set1_pd(taps[k]);
      a0 = _mm256_fmadd_pd(t, _mm256_loadu_pd(signal + i + k), a0);
      a1 = _mm256_fmadd_pd(t, _mm256_loadu_pd(signal + i + k + 4), a1);
    }
    _mm256_storeu_pd(out + i, a0);
    _mm256_storeu_pd(out + i + 4, a1);
  }
  for (; i + 4 <= n_out; i += 4) {
    __m256d a0 = _mm256_setzero_pd();
    for (std::size_t k = 0; k < m; ++k) {
      a0 = _mm256_fmadd_pd(_mm256_set1_pd(taps[k]), _mm256_loadu_pd(signal + i + k), a0);
    }
    _mm256_storeu_pd(out + i, a0);
  }
  for (; i < n_out; ++i) {
    double s = 0.0;
    for (std::size_t k = 0; k < m; ++k) s += taps[k] * signal[i + k];
    out[i] = s;
  }
}

}  // namespace

const KernelTable* avx2_table() {
  static const KernelTable table{sum_avx2, dot_avx2, moments_avx2, axpy_avx2, correlate_valid_avx2};
  return &table;
}

}  // namespace ldec::simd::detail

#else

namespace ldec::simd::detail {
const KernelTable* avx2_table() { return nullptr; }
}  // namespace ldec::simd::detail

#endif
