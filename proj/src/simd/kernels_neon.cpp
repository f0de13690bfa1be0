#include "ldec/simd/kernels.hpp"

#if defined(__aarch64__) && defined(__ARM_NEON)
#include <arm_neon.h>

namespace ldec::simd::detail {
namespace {

double sum_neon(const double* x, std::size_t n) {
  float64x2_t a0 = vdupq_n_f64(0.0);
  float64x2_t a1 = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    a0 = vaddq_f64(a0, vld1q_f64(x + i));
    a1 = vaddq_f64(a1, vld1q_f64(x + i + 2));
  }
  double s = vaddvq_f64(vaddq_f64(a0, a1));
  for (; i < n; ++i) s += x[i];
  return s;
}

double dot_neon(const double* x, const double* y, std::size_t n) {
  float64x2_t a0 = vdupq_n_f64(0.0);
  float64x2_t a1 = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    a0 = vfmaq_f64(a0, vld1q_f64(x + i), vld1q_f64(y + i));
    a1 = vfmaq_f64(a1, vld1q_f64(x + i + 2), vld1q_f64(y + i + 2));
  }
  double s = vaddvq_f64(vaddq_f64(a0, a1));
  for (; i < n; ++i) s += x[i] * y[i];
  return s;
}

Moments moments_neon(const double* x, const double* y, std::size_t n, double mx, double my) {
  const float64x2_t vmx = vdupq_n_f64(mx);
  const float64x2_t vmy = vdupq_n_f64(my);
  float64x2_t sxx = vdupq_n_f64(0.0);
  float64x2_t syy = vdupq_n_f64(0.0);
  float64x2_t sxy = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const float64x2_t dx = vsubq_f64(vld1q_f64(x + i), vmx);
    const float64x2_t dy = vsubq_f64(vld1q_f64(y + i), vmy);
    sxx = vfmaq_f64(sxx, dx, dx);
    syy = vfmaq_f64(syy, dy, dy);
    sxy = vfmaq_f64(sxy, dx, dy);
  }
  Moments m{vaddvq_f64(sxx), vaddvq_f64(syy), vaddvq_f64(sxy)};
  for (; i < n; ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    m.sxx += dx * dx;
    m.syy += dy * dy;
    m.sxy += dx * dy;
  }
  return m;
}

void axpy_neon(double alpha, const double* x, double* y, std::size_t n) {
  const float64x2_t va = vdupq_n_f64(alpha);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) vst1q_f64(y + i, vfmaq_f64(vld1q_f64(y + i), va, vld1q_f64(x + i)));
  for (; i < n; ++i) y[i] += alpha * x[i];
}

void correlate_valid_neon(const double* signal, std::size_t n, const double* taps, std::size_t m, double* out) {
  if (m == 0 || m > n) return;
  const std::size_t n_out = n - m + 1;
  std::size_t i = 0;
  for (; i + 2 <= n_out; i += 2) {
    float64x2_t a = vdupq_n_f64(0.0);
    for (std::size_t k = 0; k < m; ++k) a = vfmaq_n_f64(a, vld1q_f64(signal + i + k), taps[k]);
    vst1q_f64(out + i, a);
  }
  for (; i < n_out; ++i) {
    double s = 0.0;
    for (std::size_t k = 0; k < m; ++k) s += taps[k] * signal[i + k];
    out[i] = s;
  }
}

}  // namespace

const KernelTable* neon_table() {
  static const KernelTable table{sum_neon, dot_neon, moments_neon, axpy_neon, correlate_valid_neon};
  return &table;
}

}  // namespace ldec::simd::detail

#else

namespace ldec::simd::detail {
const KernelTable* neon_table() { return nullptr; }
}  // namespace ldec::simd::detail

#endif
