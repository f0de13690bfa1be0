#pragma once
// Data-parallel inner loops used across the pipeline.
//
// Every kernel has a scalar reference implementation and optional AVX2+FMA
// (x86-64) and NEON (aarch64) variants. The variant is chosen once per
// process from the CPU's capabilities; tests pin each level and compare
// against the scalar reference.

#include <cstddef>
#include <span>
#include <string_view>

namespace ldec::simd {

enum class Level { scalar, avx2, neon };

std::string_view to_string(Level level);

// Best level the running CPU supports.
Level detect_level();

// Level the dispatching entry points below currently use.
Level active_level();

// Pin the dispatch level (tests, benchmarking). Requesting a level the CPU
// or the build cannot run throws ldec::Error.
void set_level(Level level);

bool level_available(Level level);

// Second-order moments of two series about supplied centers.
struct Moments {
  double sxx = 0.0;
  double syy = 0.0;
  double sxy = 0.0;
};

double sum(std::span<const double> x);
double dot(std::span<const double> x, std::span<const double> y);
Moments centered_moments(std::span<const double> x, std::span<const double> y, double mx, double my);
// y += alpha * x
void axpy(double alpha, std::span<const double> x, std::span<double> y);
// out[i] = sum_k taps[k] * signal[i + k], for i < signal.size() - taps.size() + 1
void correlate_valid(std::span<const double> signal, std::span<const double> taps, std::span<double> out);

// Per-level kernel table. Exposed so equivalence tests can call a specific
// variant without touching the global dispatch state.
struct KernelTable {
  double (*sum)(const double*, std::size_t);
  double (*dot)(const double*, const double*, std::size_t);
  Moments (*centered_moments)(const double*, const double*, std::size_t, double, double);
  void (*axpy)(double, const double*, double*, std::size_t);
  void (*correlate_valid)(const double*, std::size_t, const double*, std::size_t, double*);
};

const KernelTable& kernels_for(Level level);

namespace detail {
const KernelTable& scalar_table();
const KernelTable* avx2_table();  // nullptr when not compiled in
const KernelTable* neon_table();  // nullptr when not compiled in
}  // namespace detail

}  // namespace ldec::simd
