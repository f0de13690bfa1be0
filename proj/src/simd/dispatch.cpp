#include <atomic>

#include "ldec/error.hpp"
#include "ldec/simd/kernels.hpp"

namespace ldec::simd {
namespace {

bool cpu_has_avx2_fma() {
#if defined(__x86_64__) && (defined(__GNUC__) || defined(__clang__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

std::atomic<Level>& active() {
  static std::atomic<Level> level{detect_level()};
  return level;
}

}  // namespace

std::string_view to_string(Level level) {
  switch (level) {
    case Level::scalar: return "scalar";
    case Level::avx2: return "avx2";
    case Level::neon: return "neon";
  }
  return "unknown";
}

bool level_available(Level level) {
  switch (level) {
    case Level::scalar: return true;
    case Level::avx2: return detail::avx2_table() != nullptr && cpu_has_avx2_fma();
    case Level::neon: return detail::neon_table() != nullptr;
  }
  return false;
}

Level detect_level() {
  if (level_available(Level::avx2)) return Level::avx2;
  if (level_available(Level::neon)) return Level::neon;
  return Level::scalar;
}

Level active_level() { return active().load(std::memory_order_relaxed); }

void set_level(Level level) {
  if (!level_available(level)) {
    throw Error("simd level '" + std::string(to_string(level)) + "' is not available on this machine");
  }
  active().store(level, std::memory_order_relaxed);
}

const KernelTable& kernels_for(Level level) {
  switch (level) {
    case Level::avx2:
      if (level_available(level)) return *detail::avx2_table();
      break;
    case Level::neon:
      if (level_available(level)) return *detail::neon_table();
      break;
    case Level::scalar:
      break;
  }
  return detail::scalar_table();
}

namespace {
const KernelTable& current() { return kernels_for(active_level()); }
}  // namespace

double sum(std::span<const double> x) { return current().sum(x.data(), x.size()); }

double dot(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw Error("dot: length mismatch");
  return current().dot(x.data(), y.data(), x.size());
}

Moments centered_moments(std::span<const double> x, std::span<const double> y, double mx, double my) {
  if (x.size() != y.size()) throw Error("centered_moments: length mismatch");
  return current().centered_moments(x.data(), y.data(), x.size(), mx, my);
}

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  if (x.size() != y.size()) throw Error("axpy: length mismatch");
  current().axpy(alpha, x.data(), y.data(), x.size());
}

void correlate_valid(std::span<const double> signal, std::span<const double> taps, std::span<double> out) {
  if (taps.empty() || taps.size() > signal.size()) throw Error("correlate_valid: kernel longer than signal");
  if (out.size() != signal.size() - taps.size() + 1) throw Error("correlate_valid: output length mismatch");
  current().correlate_valid(signal.data(), signal.size(), taps.data(), taps.size(), out.data());
}

}  // namespace ldec::simd
