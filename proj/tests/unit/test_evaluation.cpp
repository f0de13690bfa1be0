#include <doctest.h>

#include <cmath>
#include <random>

#include "helpers.hpp"
#include "ldec/evaluation.hpp"
#include "oracles.hpp"

using namespace ldec;

namespace {

std::vector<std::string> ids(int n, const std::string& prefix = "s") {
  std::vector<std::string> out;
  for (int i = 0; i < n; ++i) out.push_back(prefix + std::to_string(i));
  return out;
}

std::vector<long double> as_ld(const Vector& v) { return {v.data(), v.data() + v.size()}; }

}  // namespace

TEST_CASE("rank against candidates") {
  std::mt19937_64 rng(1);
  const LatentTable cands(ids(20), oracle::random_matrix(20, 16, rng));
  CHECK(rank_against_candidates(cands.row(4), cands, "s4") == 1.0);

  for (int trial = 0; trial < 10; ++trial) {
    const Vector est = oracle::random_matrix(16, 1, rng).col(0);
    const int target = trial;
    const auto target_r = oracle::pearson(as_ld(est), as_ld(cands.row(target)));
    int better = 0;
    for (int j = 0; j < 20; ++j) better += oracle::pearson(as_ld(est), as_ld(cands.row(j))) > target_r;
    CHECK(rank_against_candidates(est, cands, "s" + std::to_string(target)) == 1.0 + better);
    // Pearson invariance under positive affine maps of the estimate.
    CHECK(rank_against_candidates((3.0 * est.array() + 7.0).matrix(), cands, "s" + std::to_string(target)) ==
          1.0 + better);
  }
  const double neg = rank_against_candidates(-cands.row(0), cands, "s0");
  CHECK(neg == 20.0);

  // Hand-built correlations 0.9 / 0.5 / 0.1 with the target second.
  Matrix three(3, 4);
  const Vector e = (Vector(4) << 1, 2, 3, 4).finished();
  three.row(0) = e.transpose();                      // r = 1
  three.row(1) << 1, 3, 2, 4;                        // r = 0.8
  three.row(2) << 4, 3, 2, 1;                        // r = -1
  CHECK(rank_against_candidates(e, LatentTable({"a", "t", "c"}, three), "t") == 2.0);

  Matrix tied(3, 3);
  tied << 1, 2, 3, 1, 2, 3, 3, 2, 1;
  CHECK(rank_against_candidates((Vector(3) << 1, 2, 3).finished(), LatentTable({"a", "b", "c"}, tied), "a") == 1.5);
  CHECK(testing::throws_with([&] { rank_against_candidates(Vector::Constant(16, 2.0), cands, "s0"); }, "constant"));
}

TEST_CASE("recognition report") {
  std::mt19937_64 rng(2);
  const LatentTable truth(ids(20), oracle::random_matrix(20, 12, rng));
  RecognitionOptions opts;
  opts.n_draws = 20000;
  const auto perfect = recognition_report(truth, truth, opts);
  CHECK(perfect.pairwise_accuracy == 1.0);
  CHECK(perfect.full_accuracy == 1.0);
  CHECK(perfect.full_successes == 20);
  CHECK(perfect.p_pairwise.p_value == perfect.p_pairwise.p_floor);
  CHECK(perfect.p_full.p_value == std::pow(0.05, 20));

  const LatentTable flipped(truth.ids(), -truth.codes());
  const auto worst = recognition_report(flipped, truth, opts);
  CHECK(worst.pairwise_accuracy == 0.0);
  CHECK(worst.full_accuracy == 0.0);

  // Rank formula equals the explicit count over ordered (target, distractor) pairs.
  const LatentTable noisy(truth.ids(), truth.codes() + 2.0 * oracle::random_matrix(20, 12, rng));
  const auto rep = recognition_report(noisy, truth, opts);
  int won = 0;
  for (int i = 0; i < 20; ++i) {
    const auto r_target = oracle::pearson(as_ld(noisy.row(i)), as_ld(truth.row(i)));
    for (int j = 0; j < 20; ++j) {
      if (j == i) continue;
      won += r_target > oracle::pearson(as_ld(noisy.row(i)), as_ld(truth.row(j)));
    }
  }
  CHECK(rep.pairwise_accuracy == doctest::Approx(won / 380.0).epsilon(1e-14));

  // Estimates listed in another order are matched by id.
  std::vector<std::string> rev(truth.ids().rbegin(), truth.ids().rend());
  CHECK(recognition_report(noisy.select(rev), truth, opts).pairwise_accuracy ==
        doctest::Approx(rep.pairwise_accuracy).epsilon(1e-14));

  CHECK_THROWS_AS(recognition_report(truth.select(std::vector<std::string>{"s0"}),
                                     truth.select(std::vector<std::string>{"s0"})),
                  Error);
}

TEST_CASE("recognition at chance") {
  std::mt19937_64 rng(3);
  const int runs = 400, n = 20;
  double pair_sum = 0, full_sum = 0;
  RecognitionOptions opts;
  opts.with_p_values = false;
  for (int r = 0; r < runs; ++r) {
    const LatentTable truth(ids(n), oracle::random_matrix(n, 8, rng));
    const LatentTable guess(ids(n), oracle::random_matrix(n, 8, rng));
    const auto rep = recognition_report(guess, truth, opts);
    pair_sum += rep.pairwise_accuracy;
    full_sum += rep.full_accuracy;
  }
  const double full_se = std::sqrt(0.05 * 0.95 / (n * runs));
  CHECK(std::fabs(full_sum / runs - 0.05) < 3 * full_se);
  const double pair_se = std::sqrt((n * n - 1) / 12.0) / (n - 1) / std::sqrt(double(n) * runs);
  CHECK(std::fabs(pair_sum / runs - 0.5) < 3 * pair_se);
}

TEST_CASE("attribute classification") {
  const AttributeVector attr{"male", (Vector(3) << 1, -2, 0.5).finished(), 5, 5};
  Matrix codes(3, 3);
  codes.row(0) = attr.vector.transpose();
  codes.row(1) = -attr.vector.transpose();
  codes.row(2) << 2, 1, 0;  // orthogonal
  const LatentTable t({"p", "n", "o"}, codes);
  const auto labels = classify_attribute(t, attr);
  CHECK(labels == std::vector<AttributeLabel>{AttributeLabel::positive, AttributeLabel::negative, AttributeLabel::tie});

  auto scaled = attr;
  scaled.vector *= 3.5;
  CHECK(classify_attribute(t, scaled) == labels);
  auto negated = attr;
  negated.vector = -attr.vector;
  CHECK(classify_attribute(t, negated) ==
        std::vector<AttributeLabel>{AttributeLabel::negative, AttributeLabel::positive, AttributeLabel::tie});

  const auto score = score_classification(labels, {true, false, true});
  CHECK(score.correct == 2);  // the tie is an error
  CHECK(score.accuracy == doctest::Approx(2.0 / 3));
  CHECK(score.p_value.p_value == doctest::Approx(0.5));
  auto zero = attr;
  zero.vector.setZero();
  CHECK(testing::throws_with([&] { classify_attribute(t, zero); }, "zero"));
}

TEST_CASE("gender ceiling matches the gaussian closed form") {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> normal;
  const int n = 10000, d = 6;
  Vector axis = oracle::random_matrix(d, 1, rng).col(0).normalized();
  Matrix codes(n, d);
  std::vector<bool> male(n);
  for (int i = 0; i < n; ++i) {
    male[i] = i % 2 == 0;
    for (int j = 0; j < d; ++j) codes(i, j) = normal(rng);
    codes.row(i) += (male[i] ? 1.0 : -1.0) * axis.transpose();
  }
  const AttributeVector attr{"male", axis, 1, 1};
  const auto s = score_classification(classify_attribute(LatentTable(ids(n), codes), attr), male);
  const double want = 0.8413447460685429;
  CHECK(std::fabs(s.accuracy - want) < 3 * std::sqrt(want * (1 - want) / n));
}

TEST_CASE("attribute voxel map") {
  std::mt19937_64 rng(5);
  const Vector attr_v = oracle::random_matrix(5, 1, rng).col(0);
  Matrix w = oracle::random_matrix(6, 4, rng);
  w.col(0).tail(5) = attr_v;
  w.col(1).tail(5) = -attr_v;
  w.col(3).tail(5).setConstant(0.25);
  std::vector<std::string> names{"bias", "l0", "l1", "l2", "l3", "l4"};
  const EncodingModel model(w, names, {"a", "b", "c", "d"});
  const auto map = attribute_voxel_map(model, AttributeVector{"x", attr_v, 1, 1});
  REQUIRE(map.size() == 4);
  CHECK(*map[0] == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(*map[1] == doctest::Approx(-1.0).epsilon(1e-14));
  CHECK(std::fabs(*map[2] - static_cast<double>(oracle::pearson(as_ld(w.col(2).tail(5)), as_ld(attr_v)))) < 1e-12);
  CHECK_FALSE(map[3].has_value());
  CHECK_THROWS_AS(attribute_voxel_map(model, AttributeVector{"x", Vector::Ones(4), 1, 1}), Error);
}

TEST_CASE("variance partition closure and brute-force subsets") {
  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 30, d = 3;
    const Matrix truth = oracle::random_matrix(n, d, rng);
    const Matrix a = truth + oracle::random_matrix(n, d, rng), b = 0.5 * a + oracle::random_matrix(n, d, rng),
                 c = oracle::random_matrix(n, d, rng);
    const auto vp = variance_partition(LatentTable(ids(n), truth), LatentTable(ids(n), a), LatentTable(ids(n), b),
                                       LatentTable(ids(n), c));
    CHECK(std::fabs(vp.cell_sum() - vp.r2_full) < 1e-10);
    CHECK(vp.r2_full >= 0);
    CHECK(vp.r2_full <= 1);
    CHECK_FALSE(vp.used_pseudo_inverse);
    if (trial < 3) {
      const std::array<std::vector<int>, 7> subsets{{{0}, {1}, {2}, {0, 1}, {0, 2}, {1, 2}, {0, 1, 2}}};
      const std::array<const Matrix*, 3> preds{&a, &b, &c};
      for (std::size_t s = 0; s < 7; ++s) {
        long double mean = 0;
        for (int j = 0; j < d; ++j) {
          std::vector<std::vector<long double>> cols;
          for (int k : subsets[s]) cols.push_back(as_ld(preds[k]->col(j)));
          mean += oracle::r_squared(cols, as_ld(truth.col(j)));
        }
        CHECK(std::fabs(vp.subset_r2[s] - static_cast<double>(mean / d)) < 1e-10);
      }
    }
  }
}

TEST_CASE("variance partition degenerate cases") {
  std::mt19937_64 rng(7);
  const int n = 25, d = 2;
  const Matrix truth = oracle::random_matrix(n, d, rng);
  const Matrix a = truth + oracle::random_matrix(n, d, rng), c = oracle::random_matrix(n, d, rng);
  const LatentTable t(ids(n), truth), pa(ids(n), a), zero(ids(n), Matrix::Zero(n, d)), pc(ids(n), c);

  const auto only_a = variance_partition(t, pa, zero, zero);
  CHECK(std::fabs(only_a.unique_occ - only_a.subset_r2[0]) < 1e-12);
  for (double cell : {only_a.unique_temp, only_a.unique_fp, only_a.shared_occ_temp, only_a.shared_occ_fp,
                      only_a.shared_temp_fp, only_a.shared_all}) {
    CHECK(std::fabs(cell) < 1e-12);
  }
  CHECK(only_a.used_pseudo_inverse);

  const auto dup = variance_partition(t, pa, pa, pc);
  CHECK(std::fabs(dup.unique_occ) < 1e-12);
  CHECK(std::fabs(dup.unique_temp) < 1e-12);
  CHECK(std::fabs(dup.shared_occ_temp - (dup.subset_r2[6] - dup.subset_r2[2])) < 1e-12);
  CHECK(std::fabs(dup.cell_sum() - dup.r2_full) < 1e-10);
  CHECK(dup.used_pseudo_inverse);

  const auto dup_only = variance_partition(t, pa, pa, zero);
  CHECK(std::fabs(dup_only.shared_occ_temp - dup_only.subset_r2[0]) < 1e-12);
  CHECK_THROWS_AS(variance_partition(LatentTable(ids(3), truth.topRows(3)), pa, pa, pa), Error);
}

TEST_CASE("ssim") {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0, 1);
  auto image = [&](int r, int c) {
    Matrix m(r, c);
    for (int i = 0; i < r; ++i)
      for (int j = 0; j < c; ++j) m(i, j) = u(rng);
    return m;
  };
  for (int i = 0; i < 20; ++i) {
    const Matrix a = image(16, 16);
    CHECK(std::fabs(ssim(a, a) - 1.0) < 1e-12);
  }
  const Matrix a = image(24, 20), b = image(24, 20);
  CHECK(std::fabs(ssim(a, b) - ssim(b, a)) < 1e-12);
  CHECK(std::fabs(ssim(a, b) - oracle::ssim_direct(a, b)) < 1e-9);
  const Matrix a2 = (a.array() + 0.2).matrix(), b2 = (b.array() + 0.2).matrix();
  CHECK(std::fabs(ssim(a2, b2) - oracle::ssim_direct(a2, b2)) < 1e-9);
  SsimOptions wide;
  wide.dynamic_range = 255;
  const Matrix a255 = 255 * a, b255 = 255 * b;
  CHECK(std::fabs(ssim(a255, b255, wide) - oracle::ssim_direct(a255, b255, 255)) < 1e-9);
  CHECK(std::fabs(ssim(a255, b255, wide) - ssim(a, b)) < 1e-9);
  CHECK(ssim(a, (1.0 - a.array()).matrix()) < 0);

  const auto w = gaussian_window(11, 1.5);
  double total = 0;
  for (double v : w) total += v;
  CHECK(total == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(w[5] == *std::max_element(w.begin(), w.end()));

  CHECK_THROWS_AS(ssim(image(10, 12), image(10, 12)), Error);
  CHECK_THROWS_AS(ssim(image(12, 12), image(12, 13)), Error);
}
