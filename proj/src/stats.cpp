#include "ldec/stats.hpp"

#include <algorithm>
#include <array>
#include <boost/math/special_functions/gamma.hpp>
#include <cmath>
#include <numeric>
#include <random>
#include <string>
#include <thread>

#include "ldec/error.hpp"
#include "ldec/simd/kernels.hpp"

namespace ldec::stats {

std::string_view to_string(Method method) {
  switch (method) {
    case Method::monte_carlo: return "monte_carlo";
    case Method::enumeration: return "enumeration";
    case Method::binomial: return "binomial";
    case Method::friedman: return "friedman";
  }
  return "unknown";
}

double pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw Error("pearson: length mismatch");
  if (x.size() < 2) throw Error("pearson: need at least 2 values");
  auto constant = [](std::span<const double> v) {
    return std::all_of(v.begin(), v.end(), [&](double a) { return a == v.front(); });
  };
  if (constant(x) || constant(y)) throw Error("pearson: constant input has zero variance");
  const double n = static_cast<double>(x.size());
  const double mx = simd::sum(x) / n;
  const double my = simd::sum(y) / n;
  const auto m = simd::centered_moments(x, y, mx, my);
  if (!(m.sxx > 0.0) || !(m.syy > 0.0)) throw Error("pearson: constant input has zero variance");
  const double r = m.sxy / std::sqrt(m.sxx * m.syy);
  return std::clamp(r, -1.0, 1.0);
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
  std::uint64_t z = master + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

namespace {

// Largest rank sum whose accuracy still reaches `observed`.
long long rank_sum_bound(double observed, int n_items, int n_candidates) {
  const double total = static_cast<double>(n_items) * n_candidates;
  const double scale = static_cast<double>(n_items) * (n_candidates - 1);
  return static_cast<long long>(std::floor(total - observed * scale + 1e-9));
}

constexpr std::uint64_t kStreams = 64;

}  // namespace

TestResult monte_carlo_pairwise_p(double observed_accuracy, int n_items, int n_candidates, std::uint64_t n_draws,
                                  std::uint64_t seed) {
  if (!(observed_accuracy >= 0.0 && observed_accuracy <= 1.0)) {
    throw Error("monte_carlo_pairwise_p: observed accuracy must lie in [0, 1]");
  }
  if (n_items < 2 || n_candidates < 2) throw Error("monte_carlo_pairwise_p: need n_items, n_candidates >= 2");
  if (n_draws == 0) throw Error("monte_carlo_pairwise_p: n_draws must be positive");

  const long long bound = rank_sum_bound(observed_accuracy, n_items, n_candidates);
  std::array<std::uint64_t, kStreams> counts{};
  auto run_stream = [&](std::uint64_t s) {
    const std::uint64_t begin = n_draws * s / kStreams;
    const std::uint64_t end = n_draws * (s + 1) / kStreams;
    std::mt19937_64 rng(derive_seed(seed, s));
    std::uniform_int_distribution<int> rank(1, n_candidates);
    std::uint64_t hits = 0;
    for (std::uint64_t d = begin; d < end; ++d) {
      long long sum = 0;
      for (int i = 0; i < n_items; ++i) sum += rank(rng);
      hits += sum <= bound ? 1 : 0;
    }
    counts[s] = hits;
  };

  const unsigned n_threads = std::max(1u, std::min<unsigned>(std::thread::hardware_concurrency(), kStreams));
  if (n_threads == 1 || n_draws < 100'000) {
    for (std::uint64_t s = 0; s < kStreams; ++s) run_stream(s);
  } else {
    std::vector<std::jthread> workers;
    for (unsigned t = 0; t < n_threads; ++t) {
      workers.emplace_back([&, t] {
        for (std::uint64_t s = t; s < kStreams; s += n_threads) run_stream(s);
      });
    }
  }
  const std::uint64_t hits = std::accumulate(counts.begin(), counts.end(), std::uint64_t{0});

  TestResult result;
  result.method = Method::monte_carlo;
  result.statistic = observed_accuracy;
  result.n_draws = n_draws;
  result.p_floor = 1.0 / (static_cast<double>(n_draws) + 1.0);
  result.p_value = (static_cast<double>(hits) + 1.0) / (static_cast<double>(n_draws) + 1.0);
  return result;
}

namespace {

TestResult enumerate_by_bound(double observed, long long bound, int n_subjects, int n_candidates) {
  if (n_subjects < 1 || n_candidates < 2) throw Error("enumerate_group_pairwise_p: need >= 1 subject, >= 2 candidates");
  const double tuples = std::pow(static_cast<double>(n_candidates), n_subjects);
  if (tuples > 1e8) {
    throw Error("enumerate_group_pairwise_p: " + std::to_string(n_candidates) + "^" + std::to_string(n_subjects) +
                " tuples is too many to enumerate; use the Monte-Carlo test");
  }
  // Odometer over every rank tuple, tracking the running rank sum.
  std::vector<int> digits(static_cast<std::size_t>(n_subjects), 1);
  long long sum = n_subjects;
  std::uint64_t hits = 0;
  std::uint64_t total = 0;
  while (true) {
    ++total;
    hits += sum <= bound ? 1 : 0;
    std::size_t i = 0;
    while (i < digits.size() && digits[i] == n_candidates) {
      sum -= n_candidates - 1;
      digits[i] = 1;
      ++i;
    }
    if (i == digits.size()) break;
    ++digits[i];
    ++sum;
  }
  TestResult result;
  result.method = Method::enumeration;
  result.statistic = observed;
  result.n_draws = total;
  result.p_value = static_cast<double>(hits) / static_cast<double>(total);
  return result;
}

}  // namespace

TestResult enumerate_group_pairwise_p(std::span<const int> per_subject_ranks, int n_candidates) {
  if (per_subject_ranks.empty()) throw Error("enumerate_group_pairwise_p: no ranks");
  long long observed_sum = 0;
  for (int r : per_subject_ranks) {
    if (r < 1 || r > n_candidates) throw Error("enumerate_group_pairwise_p: rank out of range");
    observed_sum += r;
  }
  const int n = static_cast<int>(per_subject_ranks.size());
  const double observed =
      (static_cast<double>(n) * n_candidates - static_cast<double>(observed_sum)) / (n * (n_candidates - 1.0));
  return enumerate_by_bound(observed, observed_sum, n, n_candidates);
}

TestResult enumerate_group_pairwise_p(double observed_mean_accuracy, int n_subjects, int n_candidates) {
  if (!(observed_mean_accuracy >= 0.0 && observed_mean_accuracy <= 1.0)) {
    throw Error("enumerate_group_pairwise_p: observed accuracy must lie in [0, 1]");
  }
  return enumerate_by_bound(observed_mean_accuracy, rank_sum_bound(observed_mean_accuracy, n_subjects, n_candidates),
                            n_subjects, n_candidates);
}

TestResult binomial_tail_p(int successes, int n, double p0) {
  if (n < 0 || successes < 0 || successes > n) throw Error("binomial_tail_p: need 0 <= successes <= n");
  if (!(p0 > 0.0 && p0 < 1.0)) throw Error("binomial_tail_p: p0 must lie in (0, 1)");
  TestResult result;
  result.method = Method::binomial;
  result.statistic = successes;
  result.n_draws = static_cast<std::uint64_t>(n);
  if (successes == 0) {
    result.p_value = 1.0;
    return result;
  }
  if (successes == n) {
    result.p_value = std::pow(p0, n);
    return result;
  }
  const double log_p = std::log(p0);
  const double log_q = std::log1p(-p0);
  // log C(n, successes) as a sum of log ratios, then walk the tail by the
  // pmf recurrence in log space.
  double log_choose = 0.0;
  for (int i = 1; i <= successes; ++i) log_choose += std::log(static_cast<double>(n - successes + i) / i);
  std::vector<double> log_terms;
  log_terms.reserve(static_cast<std::size_t>(n - successes + 1));
  for (int k = successes; k <= n; ++k) {
    log_terms.push_back(log_choose + k * log_p + (n - k) * log_q);
    log_choose += std::log(static_cast<double>(n - k) / (k + 1));
  }
  const double peak = *std::max_element(log_terms.begin(), log_terms.end());
  double acc = 0.0;
  for (double t : log_terms) acc += std::exp(t - peak);
  result.p_value = std::min(1.0, std::exp(peak + std::log(acc)));
  return result;
}

std::vector<double> midranks(std::span<const double> values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(values.size());
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() && values[order[j + 1]] == values[order[i]]) ++j;
    const double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = avg;
    i = j + 1;
  }
  return ranks;
}

namespace {

Vector rank_sums(const Matrix& blocks) {
  Vector sums = Vector::Zero(blocks.cols());
  std::vector<double> row(static_cast<std::size_t>(blocks.cols()));
  for (Index b = 0; b < blocks.rows(); ++b) {
    for (Index t = 0; t < blocks.cols(); ++t) {
      if (!std::isfinite(blocks(b, t))) throw Error("friedman: non-finite value in block " + std::to_string(b));
      row[static_cast<std::size_t>(t)] = blocks(b, t);
    }
    const auto r = midranks(row);
    for (Index t = 0; t < blocks.cols(); ++t) sums(t) += r[static_cast<std::size_t>(t)];
  }
  return sums;
}

}  // namespace

TestResult friedman_test(const Matrix& blocks) {
  const Index n = blocks.rows();
  const Index k = blocks.cols();
  if (n < 2 || k < 2) throw Error("friedman_test: need at least 2 blocks and 2 treatments");
  const Vector sums = rank_sums(blocks);
  const double nd = static_cast<double>(n);
  const double kd = static_cast<double>(k);
  double chi2 = 12.0 / (nd * kd * (kd + 1.0)) * sums.squaredNorm() - 3.0 * nd * (kd + 1.0);
  // Exact zero when every block is fully tied; absorb rounding residue.
  if (std::abs(chi2) < 1e-9 * 3.0 * nd * (kd + 1.0)) chi2 = 0.0;
  TestResult result;
  result.method = Method::friedman;
  result.statistic = chi2;
  result.df = kd - 1.0;
  result.p_value = chi2_upper_tail(chi2, result.df);
  return result;
}

PosthocTable friedman_posthoc(const Matrix& blocks, double alpha) {
  const Index n = blocks.rows();
  const Index k = blocks.cols();
  if (k < 3) throw Error("post-hoc requires >= 3 treatments");
  if (k > 10) throw Error("post-hoc: Nemenyi critical values are tabulated up to 10 treatments");
  if (n < 2) throw Error("post-hoc: need at least 2 blocks");
  // Studentized range quantiles divided by sqrt(2), k = 2..10.
  static constexpr std::array<double, 9> q05{1.960, 2.343, 2.569, 2.728, 2.850, 2.949, 3.031, 3.102, 3.164};
  static constexpr std::array<double, 9> q10{1.645, 2.052, 2.291, 2.459, 2.589, 2.693, 2.780, 2.855, 2.920};
  const std::array<double, 9>* table = nullptr;
  if (std::abs(alpha - 0.05) < 1e-12) table = &q05;
  if (std::abs(alpha - 0.10) < 1e-12) table = &q10;
  if (!table) throw Error("post-hoc: alpha must be 0.05 or 0.10");

  PosthocTable out;
  out.alpha = alpha;
  const Vector sums = rank_sums(blocks);
  for (Index t = 0; t < k; ++t) out.mean_ranks.push_back(sums(t) / static_cast<double>(n));
  const double kd = static_cast<double>(k);
  out.critical_difference = (*table)[static_cast<std::size_t>(k - 2)] * std::sqrt(kd * (kd + 1.0) / (6.0 * n));
  for (int a = 0; a < k; ++a) {
    for (int b = a + 1; b < k; ++b) {
      PairComparison c;
      c.first = a;
      c.second = b;
      c.mean_rank_difference = out.mean_ranks[a] - out.mean_ranks[b];
      c.significant = std::abs(c.mean_rank_difference) > out.critical_difference;
      out.pairs.push_back(c);
    }
  }
  return out;
}

double chi2_upper_tail(double x, double df) {
  if (!(df > 0.0)) throw Error("chi2_upper_tail: df must be positive");
  if (x <= 0.0) return 1.0;
  return boost::math::gamma_q(df / 2.0, x / 2.0);
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double ks_distance_uniform(std::vector<double> samples) {
  if (samples.empty()) throw Error("ks_distance_uniform: no samples");
  std::sort(samples.begin(), samples.end());
  const double n = static_cast<double>(samples.size());
  double d = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double u = std::clamp(samples[i], 0.0, 1.0);
    d = std::max({d, (static_cast<double>(i) + 1.0) / n - u, u - static_cast<double>(i) / n});
  }
  return d;
}

}  // namespace ldec::stats
