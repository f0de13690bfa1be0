#include <doctest.h>

#include "helpers.hpp"
#include "ldec/config.hpp"

using namespace ldec;

TEST_CASE("defaults") {
  const RunConfig c = parse_config("");
  CHECK(c.design.tr_s == 2.0);
  CHECK(c.design.microtime_bins == 16);
  CHECK(c.fit.ridge == 0.0);
  CHECK(c.select.t_threshold == 4.0);
  CHECK(c.select.gain_threshold_pct == 8.0);
  CHECK(c.select.segment_axis == SegmentAxis::z);
  CHECK(c.stats.n_draws == 1000000);
  CHECK(c.sim.n_latent_dims == 64);
}

TEST_CASE("parsing sections, comments and quoted values") {
  const auto c = parse_config(R"(
# run settings
[design]
tr_s = 1.5   # seconds
[select]
segment_axis = "y"
[stats]
seed = 99
[sim]
region_gain = [1.0, 0.5, 0.25]
test_pattern_mode = "peak_average"
n_voxels = 200
n_latent_dims = 10
)");
  CHECK(c.design.tr_s == 1.5);
  CHECK(c.select.segment_axis == SegmentAxis::y);
  CHECK(c.stats.seed == 99);
  CHECK(c.sim.region_gain[2] == 0.25);
  CHECK(c.sim.test_pattern_mode == TestPatternMode::peak_average);
  CHECK(c.sim.n_voxels == 200);
}

TEST_CASE("rejections") {
  CHECK(testing::throws_with([] { parse_config("[fit]\nlambda = 1\n"); }, "unknown key fit.lambda"));
  CHECK(testing::throws_with([] { parse_config("[plots]\n"); }, "unknown section"));
  CHECK(testing::throws_with([] { parse_config("tr_s = 2\n"); }, "outside a section"));
  CHECK(testing::throws_with([] { parse_config("[design]\ntr_s 2\n"); }, "line 2"));
  CHECK(testing::throws_with([] { parse_config("[design]\nmicrotime_bins = 2.5\n"); }, "integer"));
  CHECK(testing::throws_with([] { parse_config("[design]\ntr_s = 2\ntr_s = 3\n"); }, "duplicate"));
  CHECK(testing::throws_with([] { parse_config("[sim]\nregion_gain = [1, 2]\n"); }, "three"));
  CHECK(testing::throws_with([] { parse_config("[fit]\nridge = -1\n"); }, "ridge"));
  CHECK(testing::throws_with([] { parse_config("[sim]\nn_voxels = 10\n"); }, "n_voxels"));
}

TEST_CASE("format and parse round-trip, seed override") {
  RunConfig c;
  c.sim.noise_sigma = 0.25;
  c.sim.region_gain = {1, 0.75, 0.5};
  c.select.segment_axis = SegmentAxis::y;
  c.override_seed(17);
  CHECK(c.sim.seed == 17);
  CHECK(c.stats.seed == 17);
  const auto back = parse_config(format_config(c));
  CHECK(format_config(back) == format_config(c));
  CHECK(back.sim.noise_sigma == 0.25);
  CHECK(back.select.segment_axis == SegmentAxis::y);
}

TEST_CASE("formatted values read back bit-exact") {
  RunConfig c;
  c.sim.noise_sigma = 0.1 + 0.2;
  c.fit.ridge = 1e-7 / 3;
  const auto back = parse_config(format_config(c));
  CHECK(back.sim.noise_sigma == c.sim.noise_sigma);
  CHECK(back.fit.ridge == c.fit.ridge);
}
