#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "ldec/io.hpp"
#include "ldec/simulator.hpp"
#include "oracles.hpp"

using namespace ldec;

namespace {

SimConfig small_config() {
  SimConfig c;
  c.n_train_stimuli = 160;
  c.n_test_stimuli = 10;
  c.n_latent_dims = 8;
  c.n_voxels = 60;
  c.test_repeats = 4;
  c.noise_sigma = 0.0;
  return c;
}

}  // namespace

TEST_CASE("config validation") {
  auto c = small_config();
  CHECK_NOTHROW(c.validate());
  c.n_voxels = 8;
  CHECK(testing::throws_with([&] { c.validate(); }, "n_voxels"));
  c = small_config();
  c.tr_s = 0;
  CHECK_THROWS_AS(simulate_subject(c), Error);
  c = small_config();
  c.noise_sigma = -1;
  CHECK_THROWS_AS(c.validate(), Error);
  CHECK(parse_test_pattern_mode("peak_average") == TestPatternMode::peak_average);
  CHECK_THROWS_AS(parse_test_pattern_mode("betas"), Error);
}

TEST_CASE("simulated subject structure") {
  const auto c = small_config();
  const auto s = simulate_subject(c);
  const auto& t = s.truth;
  CHECK(t.w_star.rows() == 9);
  CHECK(t.w_star.cols() == 60);
  CHECK(t.w_star.allFinite());
  CHECK(t.train_latents.size() == 160);
  CHECK(t.test_latents.size() == 10);
  CHECK(std::fabs(t.gender_axis.norm() - 1.0) < 1e-14);
  const auto males = std::count(t.train_male.begin(), t.train_male.end(), true);
  CHECK(std::abs(2 * males - 160) <= 1);
  CHECK(t.voxels.size() == 60);
  CHECK(t.voxels.ids_in(Region::occipital).size() == 20);

  int train = 0, test = 0, fix = 0, one_back = 0;
  for (const auto& tr : s.trials) {
    train += tr.condition == Condition::train_face;
    test += tr.condition == Condition::test_face;
    fix += tr.condition == Condition::fixation;
    one_back += tr.condition == Condition::one_back;
  }
  CHECK(train == 160);
  CHECK(test == 40);
  CHECK(fix == static_cast<int>(std::llround(0.3 * 200)));
  CHECK(one_back == static_cast<int>(std::llround(0.09 * 160)));
  CHECK_NOTHROW(validate_trials(s.trials));
  for (std::size_t i = 1; i < s.trials.size(); ++i) {
    if (s.trials[i].condition == Condition::one_back) CHECK(s.trials[i].stim_id == s.trials[i - 1].stim_id);
  }
  CHECK(s.bold.values.rows() * c.tr_s >= s.trials.back().onset_s + 1 + c.tail_s);
  CHECK(s.bold.voxel_ids == t.voxels.ids());

  // Gender offset along the axis: class means differ by the separation.
  double pm = 0, pf = 0;
  for (Index i = 0; i < 160; ++i) {
    const double proj = t.train_latents.row(i).dot(t.gender_axis);
    (t.train_male[i] ? pm : pf) += proj / 80.0;
  }
  CHECK(std::fabs(pm - pf - c.gender_separation) < 0.5);
}

TEST_CASE("determinism") {
  auto c = small_config();
  c.noise_sigma = 1.0;
  const auto a = simulate_subject(c), b = simulate_subject(c);
  CHECK(io::encode_matrix(a.bold.values) == io::encode_matrix(b.bold.values));
  CHECK(io::encode_matrix(a.truth.w_star) == io::encode_matrix(b.truth.w_star));
  c.seed = 2;
  CHECK(io::encode_matrix(simulate_subject(c).bold.values) != io::encode_matrix(a.bold.values));
}

TEST_CASE("noise-free pipeline recovers everything") {
  const auto c = small_config();
  const auto s = simulate_subject(c);
  const auto r = run_pipeline(s, c);
  CHECK(r.w_relative_error < 1e-8);
  CHECK(r.recognition.pairwise_accuracy == 1.0);
  CHECK(r.recognition.full_accuracy == 1.0);
  CHECK(r.gender_accuracy == r.gender_ceiling);
  CHECK(oracle::rel_error(r.decoded.latents.select(s.truth.test_latents.ids()).codes(), s.truth.test_latents.codes()) <
        1e-8);
}

TEST_CASE("peak-average test patterns still identify test faces without noise") {
  auto c = small_config();
  c.test_pattern_mode = TestPatternMode::peak_average;
  const auto r = run_pipeline(simulate_subject(c), c);
  CHECK(r.recognition.pairwise_accuracy > 0.8);
}

TEST_CASE("noise scaling reuses the same draws") {
  auto c = small_config();
  c.noise_sigma = 0.0;
  const Matrix clean = simulate_subject(c).bold.values;
  c.noise_sigma = 1.0;
  const Matrix n1 = simulate_subject(c).bold.values - clean;
  c.noise_sigma = 3.0;
  const Matrix n3 = simulate_subject(c).bold.values - clean;
  CHECK((n3 - 3.0 * n1).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("training-size study") {
  const auto c = small_config();
  const auto rows = run_training_size_study(c, {0.25, 0.5, 1.0});
  REQUIRE(rows.size() == 3);
  for (const auto& r : rows) {
    CHECK(r.pairwise == 1.0);
    CHECK(r.full == 1.0);
  }
  CHECK(rows[0].n_training_trials == 40);
  CHECK(rows[2].n_training_trials == 160);

  // Fraction 1 is the plain fit.
  const auto s = simulate_subject(c);
  const auto plain = run_pipeline(s, c);
  PipelineOptions one;
  one.training_fraction = 1.0;
  CHECK(io::encode_matrix(run_pipeline(s, c, one).model.weights()) == io::encode_matrix(plain.model.weights()));

  CHECK(testing::throws_with([&] { run_training_size_study(c, {0.02}); }, "not identifiable"));
  // Ridge lets the fit through, but k trials span at most k design
  // directions, so W stays rank deficient and decoding refuses.
  auto ridged = c;
  ridged.ridge = 1.0;
  CHECK(testing::throws_with([&] { run_training_size_study(ridged, {0.02}); }, "singular"));
  CHECK_THROWS_AS(run_training_size_study(c, {0.5, 0.25}), Error);
  CHECK_THROWS_AS(run_training_size_study(c, {1.5}), Error);
}

TEST_CASE("snr sweep") {
  auto c = small_config();
  const auto rows = run_snr_sweep(c, {0.0, 50.0});
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].pairwise == 1.0);
  CHECK(rows[0].gender == rows[0].gender_ceiling);
  CHECK(rows[1].pairwise < 1.0);
  CHECK_THROWS_AS(run_snr_sweep(c, {1.0, 0.5}), Error);
  CHECK_THROWS_AS(run_snr_sweep(c, {-1.0}), Error);
}

TEST_CASE("replicates are independent of thread scheduling") {
  auto c = small_config();
  c.noise_sigma = 2.0;
  const auto a = run_snr_sweep(c, {2.0}, 3);
  const auto b = run_snr_sweep(c, {2.0}, 3);
  CHECK(a[0].pairwise == b[0].pairwise);
  CHECK(a[0].replicates == 3);
}
