#include "ldec/simd/kernels.hpp"

namespace ldec::simd::detail {
namespace {

double sum_scalar(const double* x, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += x[i];
  return s;
}

double dot_scalar(const double* x, const double* y, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += x[i] * y[i];
  return s;
}

Moments moments_scalar(const double* x, const double* y, std::size_t n, double mx, double my) {
  Moments m;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    m.sxx += dx * dx;
    m.syy += dy * dy;
    m.sxy += dx * dy;
  }
  return m;
}

void axpy_scalar(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void correlate_valid_scalar(const double* signal, std::size_t n, const double* taps, std::size_t m, double* out) {
  if (m == 0 || m > n) return;
  const std::size_t n_out = n - m + 1;
  for (std::size_t i = 0; i < n_out; ++i) {
    double s = 0.0;
    for (std::size_t k = 0; k < m; ++k) s += taps[k] * signal[i + k];
    out[i] = s;
  }
}

}  // namespace

const KernelTable& scalar_table() {
  static const KernelTable table{sum_scalar, dot_scalar, moments_scalar, axpy_scalar, correlate_valid_scalar};
  return table;
}

}  // namespace ldec::simd::detail
