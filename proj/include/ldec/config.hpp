#pragma once
// Run configuration: a flat sectioned key = value text file.
//
//   # comment
//   [design]
//   tr_s = 2.0
//   [sim]
//   region_gain = [1.0, 0.7, 0.4]
//   test_pattern_mode = "glm_beta"
//
// Unknown sections or keys are rejected. Missing keys keep their defaults.

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include "ldec/simulator.hpp"
#include "ldec/voxel_select.hpp"

namespace ldec {

struct RunConfig {
  struct {
    double tr_s = 2.0;
    int microtime_bins = 16;
  } design;
  struct {
    double ridge = 0.0;
  } fit;
  struct {
    double t_threshold = 4.0;
    double gain_threshold_pct = 8.0;
    SegmentAxis segment_axis = SegmentAxis::z;
  } select;
  struct {
    std::uint64_t n_draws = 1'000'000;
    std::uint64_t seed = 1;
  } stats;
  SimConfig sim;

  // Sets both the statistics seed and the simulation seed.
  void override_seed(std::uint64_t seed);
  void validate() const;
};

RunConfig parse_config(std::string_view text);
RunConfig read_config(const std::filesystem::path& path);
// Every key with its current value, in the same syntax parse_config reads.
std::string format_config(const RunConfig& config);

}  // namespace ldec
