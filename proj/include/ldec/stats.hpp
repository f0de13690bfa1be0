#pragma once
// Significance tests used to evaluate decoding: Pearson correlation, the
// uniform-rank Monte-Carlo surrogate for pairwise recognition (and its exact
// enumeration for small groups), binomial tails, and Friedman rank tests with
// Nemenyi post-hoc comparisons.

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "ldec/types.hpp"

namespace ldec::stats {

enum class Method { monte_carlo, enumeration, binomial, friedman };

std::string_view to_string(Method method);

struct TestResult {
  double statistic = 0.0;
  double p_value = 1.0;
  Method method = Method::monte_carlo;
  std::uint64_t n_draws = 0;  // Monte-Carlo draws or enumerated tuples
  double df = 0.0;            // Friedman degrees of freedom
  double p_floor = 0.0;       // smallest reportable p (Monte-Carlo only)
};

// Sample Pearson correlation. Throws on length mismatch, n < 2, or a
// constant input.
double pearson(std::span<const double> x, std::span<const double> y);

// Pairwise accuracy credited to a target ranked `rank` among n_candidates.
inline double pairwise_accuracy_from_rank(double rank, int n_candidates) {
  return (n_candidates - rank) / (n_candidates - 1.0);
}

// Null: each of n_items targets lands at a rank drawn uniformly from
// 1..n_candidates. p = (#surrogates >= observed + 1) / (n_draws + 1).
// Draws are split into fixed seed-derived sub-streams, so the result does not
// depend on how many threads run them.
TestResult monte_carlo_pairwise_p(double observed_accuracy, int n_items, int n_candidates,
                                  std::uint64_t n_draws = 1'000'000, std::uint64_t seed = 1);

// Exact version of the surrogate test: enumerates every rank tuple, one rank
// per subject. Refuses more than 1e8 tuples.
TestResult enumerate_group_pairwise_p(std::span<const int> per_subject_ranks, int n_candidates);
TestResult enumerate_group_pairwise_p(double observed_mean_accuracy, int n_subjects, int n_candidates);

// Upper tail P(X >= successes) for X ~ Binomial(n, p0).
TestResult binomial_tail_p(int successes, int n, double p0);

// Rows are blocks (subjects), columns are treatments. Midranks within each
// block, no tie correction.
TestResult friedman_test(const Matrix& blocks);

struct PairComparison {
  int first = 0;
  int second = 0;
  double mean_rank_difference = 0.0;  // mean_rank[first] - mean_rank[second]
  bool significant = false;
};

struct PosthocTable {
  std::vector<double> mean_ranks;  // per treatment; higher rank = larger value
  double critical_difference = 0.0;
  double alpha = 0.05;
  std::vector<PairComparison> pairs;
};

// Nemenyi critical-difference comparisons on Friedman mean ranks.
// Supports 3..10 treatments and alpha in {0.05, 0.10}.
PosthocTable friedman_posthoc(const Matrix& blocks, double alpha = 0.05);

// Midranks (1-based; ties share the average of the positions they occupy).
std::vector<double> midranks(std::span<const double> values);

double chi2_upper_tail(double x, double df);
double normal_cdf(double x);

// Kolmogorov-Smirnov distance between the empirical distribution of samples
// and Uniform(0, 1).
double ks_distance_uniform(std::vector<double> samples);

// Deterministic sub-stream seed derivation (splitmix64 finalizer).
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream);

}  // namespace ldec::stats
