#include <doctest.h>

#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include "helpers.hpp"
#include "ldec/stats.hpp"
#include "oracles.hpp"

using namespace ldec;
using namespace ldec::stats;

TEST_CASE("pearson") {
  const std::vector<double> x{1, 2, 3, 4}, y{1, 3, 2, 4};
  CHECK(pearson(x, x) == doctest::Approx(1.0).epsilon(1e-15));
  const std::vector<double> rev{4, 3, 2, 1};
  CHECK(pearson(x, rev) == doctest::Approx(-1.0).epsilon(1e-15));
  CHECK(pearson(x, y) == doctest::Approx(0.8).epsilon(1e-15));
  const std::vector<double> flat{2, 2, 2, 2};
  CHECK(testing::throws_with([&] { pearson(x, flat); }, "constant"));
  CHECK_THROWS_AS(pearson(std::vector<double>{1.0}, std::vector<double>{2.0}), Error);

  std::mt19937_64 rng(5);
  std::normal_distribution<double> normal;
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> a(37), b(37);
    std::vector<long double> la(37), lb(37);
    for (int i = 0; i < 37; ++i) {
      la[i] = a[i] = normal(rng) + 100;
      lb[i] = b[i] = normal(rng) * 1e-3;
    }
    CHECK(std::fabs(pearson(a, b) - static_cast<double>(oracle::pearson(la, lb))) < 1e-12);
  }
}

TEST_CASE("midranks average tied positions") {
  const std::vector<double> v{3, 1, 3, 2};
  CHECK(midranks(v) == std::vector<double>{3.5, 1, 3.5, 2});
}

TEST_CASE("monte-carlo pairwise p") {
  const auto zero = monte_carlo_pairwise_p(0.0, 20, 20, 20000, 3);
  CHECK(zero.p_value == 1.0);
  const auto top = monte_carlo_pairwise_p(1.0, 20, 20, 20000, 3);
  CHECK(top.p_value == doctest::Approx(1.0 / 20001));
  CHECK(top.p_value == top.p_floor);
  CHECK(top.method == Method::monte_carlo);
  CHECK(top.n_draws == 20000);

  // Null median: a little above 1/2 because ties at exactly 0.5 are counted.
  const auto mid = monte_carlo_pairwise_p(0.5, 20, 20, 200000, 9);
  CHECK(std::fabs(mid.p_value - 0.5) < 0.06);
  const auto above = monte_carlo_pairwise_p(0.5 + 1e-9, 20, 20, 200000, 9);
  CHECK(std::fabs(0.5 * (mid.p_value + above.p_value) - 0.5) < 0.01);

  SUBCASE("deterministic and monotone for a fixed seed") {
    double prev = 2.0;
    for (double acc = 0.3; acc <= 0.8; acc += 0.05) {
      const auto a = monte_carlo_pairwise_p(acc, 10, 20, 5000, 42);
      const auto b = monte_carlo_pairwise_p(acc, 10, 20, 5000, 42);
      CHECK(a.p_value == b.p_value);
      CHECK(a.p_value <= prev);
      prev = a.p_value;
    }
  }
  CHECK_THROWS_AS(monte_carlo_pairwise_p(1.5, 20, 20), Error);
  CHECK_THROWS_AS(monte_carlo_pairwise_p(0.5, 1, 20), Error);
}

TEST_CASE("exact enumeration of group ranks") {
  const std::vector<int> best{1, 1, 1, 1};
  CHECK(enumerate_group_pairwise_p(best, 20).p_value == doctest::Approx(1.0 / 160000).epsilon(1e-15));
  const std::vector<int> worst{20, 20, 20, 20};
  CHECK(enumerate_group_pairwise_p(worst, 20).p_value == 1.0);
  const auto r = enumerate_group_pairwise_p(0.842, 4, 20);
  CHECK(r.method == Method::enumeration);
  CHECK(r.n_draws == 160000);
  CHECK(r.p_value == 1820.0 / 160000.0);

  // Brute-force count over 3 subjects and 7 candidates for every observed tuple.
  for (int a = 1; a <= 7; ++a)
    for (int b = 1; b <= 7; ++b) {
      const std::vector<int> obs{a, b, 3};
      int count = 0;
      for (int i = 1; i <= 7; ++i)
        for (int j = 1; j <= 7; ++j)
          for (int k = 1; k <= 7; ++k) count += (i + j + k <= a + b + 3);
      CHECK(enumerate_group_pairwise_p(obs, 7).p_value == doctest::Approx(count / 343.0).epsilon(1e-14));
    }

  CHECK(testing::throws_with([] { enumerate_group_pairwise_p(0.5, 7, 20); }, "Monte-Carlo"));
  CHECK_THROWS_AS(enumerate_group_pairwise_p(std::vector<int>{0, 2}, 20), Error);
}

TEST_CASE("enumeration agrees with monte-carlo within three standard errors") {
  const std::vector<int> ranks{3, 7, 2};
  const double acc = (3 * 20 - (3 + 7 + 2)) / (3 * 19.0);
  const double exact = enumerate_group_pairwise_p(ranks, 20).p_value;
  const std::uint64_t draws = 200000;
  const double mc = monte_carlo_pairwise_p(acc, 3, 20, draws, 5).p_value;
  CHECK(std::fabs(mc - exact) < 3 * std::sqrt(exact * (1 - exact) / draws) + 1.0 / draws);
}

TEST_CASE("binomial tails") {
  CHECK(binomial_tail_p(20, 20, 0.5).p_value == std::ldexp(1.0, -20));
  CHECK(binomial_tail_p(0, 20, 0.3).p_value == 1.0);
  CHECK(binomial_tail_p(7, 7, 0.3).p_value == std::pow(0.3, 7));
  const double p13 = binomial_tail_p(13, 20, 0.05).p_value;
  CHECK(p13 < 1e-6);
  CHECK(std::fabs(p13 - static_cast<double>(oracle::binomial_tail(13, 20, 0.05L))) < 1e-12 * p13);
  const double p56 = binomial_tail_p(56, 80, 0.5).p_value;
  const double exact56 = static_cast<double>(oracle::binomial_half_tail(56, 80));
  CHECK(std::fabs(p56 - exact56) <= 1e-12 * exact56);
  CHECK(p56 > 1e-5);
  CHECK(p56 < 1e-3);
  for (int k = 0; k <= 30; ++k) {
    const double got = binomial_tail_p(k, 30, 0.37).p_value;
    const double want = static_cast<double>(oracle::binomial_tail(k, 30, 0.37L));
    CHECK(std::fabs(got - want) <= 1e-12 * want);
  }
  CHECK_THROWS_AS(binomial_tail_p(21, 20, 0.5), Error);
  CHECK_THROWS_AS(binomial_tail_p(1, 20, 1.0), Error);
}

TEST_CASE("friedman test") {
  Matrix two(4, 2);
  two << 2, 1, 5, 3, 0.9, 0.1, 7, 6;
  const auto r2 = friedman_test(two);
  CHECK(r2.statistic == 4.0);
  CHECK(r2.df == 1.0);
  CHECK(r2.p_value > 0.045);
  CHECK(r2.p_value < 0.046);

  Matrix three(4, 3);
  three << 3, 2, 1, 0.9, 0.5, 0.1, 30, 20, 10, 3.5, 2.5, 1.5;
  const auto r3 = friedman_test(three);
  CHECK(r3.statistic == 8.0);
  CHECK(r3.p_value == doctest::Approx(std::exp(-4.0)).epsilon(1e-12));

  const auto tied = friedman_test(Matrix::Constant(5, 3, 2.0));
  CHECK(tied.statistic == 0.0);
  CHECK(tied.p_value == 1.0);

  // Rank based: monotone transforms within blocks leave the statistic alone.
  std::mt19937_64 rng(8);
  const Matrix raw = oracle::random_matrix(6, 4, rng);
  const Matrix transformed = raw.array().exp().eval() * 3.0;
  CHECK(friedman_test(raw).statistic == doctest::Approx(friedman_test(transformed).statistic));
  CHECK_THROWS_AS(friedman_test(Matrix::Zero(1, 3)), Error);
}

TEST_CASE("chi-square tail against closed forms") {
  CHECK(chi2_upper_tail(8.0, 2.0) == doctest::Approx(std::exp(-4.0)).epsilon(1e-13));
  CHECK(chi2_upper_tail(4.0, 1.0) == doctest::Approx(std::erfc(std::sqrt(2.0))).epsilon(1e-13));
  CHECK(chi2_upper_tail(0.0, 3.0) == 1.0);
  CHECK(normal_cdf(1.0) == doctest::Approx(0.8413447460685429).epsilon(1e-14));
}

TEST_CASE("nemenyi post-hoc") {
  Matrix three(4, 3);
  three << 3, 2, 1, 3, 2, 1, 3, 2, 1, 3, 2, 1;
  const auto t = friedman_posthoc(three);
  CHECK(t.critical_difference == doctest::Approx(2.343 * std::sqrt(3.0 * 4.0 / (6.0 * 4.0))).epsilon(1e-12));
  REQUIRE(t.pairs.size() == 3);
  int significant = 0;
  for (const auto& p : t.pairs) {
    const bool extreme = (p.first == 0 && p.second == 2) || (p.first == 2 && p.second == 0);
    CHECK(p.significant == extreme);
    significant += p.significant;
  }
  CHECK(significant == 1);

  for (const auto& p : friedman_posthoc(Matrix::Constant(4, 3, 1.0)).pairs) CHECK_FALSE(p.significant);
  CHECK(testing::throws_with([] { friedman_posthoc(Matrix::Zero(4, 2)); }, "post-hoc requires >= 3 treatments"));
  CHECK_THROWS_AS(friedman_posthoc(three, 0.01), Error);
}

TEST_CASE("nemenyi family-wise false positive rate under the null") {
  std::mt19937_64 rng(123);
  int runs_with_any = 0;
  const int runs = 1000;
  for (int i = 0; i < runs; ++i) {
    const Matrix blocks = oracle::random_matrix(12, 4, rng);
    const auto t = friedman_posthoc(blocks);
    bool any = false;
    for (const auto& p : t.pairs) any = any || p.significant;
    runs_with_any += any;
  }
  const double rate = static_cast<double>(runs_with_any) / runs;
  CHECK(rate <= 0.05 + 3 * std::sqrt(0.05 * 0.95 / runs));
}

TEST_CASE("ks distance and seed derivation") {
  CHECK(ks_distance_uniform({0.5}) == doctest::Approx(0.5));
  std::vector<double> grid;
  for (int i = 0; i < 100; ++i) grid.push_back((i + 0.5) / 100);
  CHECK(ks_distance_uniform(grid) == doctest::Approx(0.005));
  CHECK(derive_seed(1, 0) != derive_seed(1, 1));
  CHECK(derive_seed(1, 0) != derive_seed(2, 0));
  CHECK(derive_seed(7, 3) == derive_seed(7, 3));
}
