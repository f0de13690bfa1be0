#pragma once
// Synthetic subjects with a known encoding model, used as the ground-truth
// oracle for the decoding pipeline.
//
// Latent codes are standard normal, shifted by +-gender_separation/2 along a
// fixed random unit axis. The true weights W* (bias row first) are standard
// normal scaled by signal_scale * region_gain / sqrt(n_latent + 1). The BOLD
// time series is the HRF-convolved design times W*, plus a one-back response
// pattern, a per-voxel baseline and i.i.d. Gaussian noise.

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "ldec/design_matrix.hpp"
#include "ldec/evaluation.hpp"
#include "ldec/latent_codec.hpp"
#include "ldec/linear_decoder.hpp"
#include "ldec/voxel_select.hpp"

namespace ldec {

enum class TestPatternMode {
  glm_beta,      // per-stimulus condition regressors in the training GLM
  peak_average,  // demeaned scans at the response peak, averaged over repeats
};

std::string_view to_string(TestPatternMode mode);
TestPatternMode parse_test_pattern_mode(std::string_view text);

struct SimConfig {
  int n_train_stimuli = 800;
  int n_test_stimuli = 20;
  int n_latent_dims = 64;
  int n_voxels = 1500;
  double tr_s = 2.0;
  double stim_duration_s = 1.0;
  double isi_s = 2.0;
  double noise_sigma = 1.0;
  int test_repeats = 45;
  double gender_separation = 2.0;
  std::uint64_t seed = 1;

  double signal_scale = 1.0;
  double fixation_ratio = 0.3;    // fixation trials per face trial
  double one_back_ratio = 0.09;   // one-back repeats per training face
  double lead_in_s = 6.0;
  double tail_s = 32.0;
  double baseline = 100.0;
  std::array<double, 3> region_gain{1.0, 1.0, 1.0};  // occipital, temporal, frontoparietal
  int microtime_bins = 16;
  double ridge = 0.0;
  TestPatternMode test_pattern_mode = TestPatternMode::glm_beta;

  void validate() const;
};

struct SimGroundTruth {
  Matrix w_star;  // (n_latent + 1) x n_voxels, bias row first
  LatentTable train_latents;
  LatentTable test_latents;
  std::vector<bool> train_male;
  std::vector<bool> test_male;
  Vector gender_axis;        // unit vector
  Vector one_back_response;  // per voxel
  Vector baseline;           // per voxel
  VoxelSet voxels;           // grid coordinates and regions
};

struct SimulatedSubject {
  TrialTable trials;
  BoldPatterns bold;  // scans x voxels
  SimGroundTruth truth;
};

SimulatedSubject simulate_subject(const SimConfig& config);

// Fit -> decode -> evaluate on one simulated subject.
struct PipelineOptions {
  double training_fraction = 1.0;  // prefix of training trials used to fit W
  bool with_p_values = false;
  std::uint64_t n_draws = 1'000'000;
  std::uint64_t stats_seed = 1;
};

struct PipelineResult {
  EncodingModel model;
  DesignMatrix design;
  DecodedLatents decoded;
  RecognitionReport recognition;
  int n_training_trials = 0;
  double w_relative_error = 0.0;  // |W - W*|_F / |W*|_F (NaN when W* is zero)
  double gender_accuracy = 0.0;   // classifier on decoded test codes
  double gender_ceiling = 0.0;    // same classifier on true test codes
};

PipelineResult run_pipeline(const SimulatedSubject& subject, const SimConfig& config,
                            const PipelineOptions& options = {});

struct StudyRow {
  double parameter = 0.0;  // training fraction or noise sigma
  double pairwise = 0.0;
  double full = 0.0;
  double gender = 0.0;
  double gender_ceiling = 0.0;
  int n_training_trials = 0;
  int replicates = 0;
};

// Replicate r uses seed derive_seed(config.seed, r); fractions ascending in (0, 1].
std::vector<StudyRow> run_training_size_study(const SimConfig& config, const std::vector<double>& fractions,
                                              int n_replicates = 1);

// Sigmas ascending and nonnegative. Each replicate reuses its subject's
// noise draws across sigmas.
std::vector<StudyRow> run_snr_sweep(const SimConfig& config, const std::vector<double>& sigmas, int n_replicates = 1);

}  // namespace ldec
