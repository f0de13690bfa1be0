#pragma once
// GLM design construction: trial timing -> HRF-convolved regressors, with one
// parametric regressor per latent dimension and a face-vs-fixation bias.

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ldec/latent_codec.hpp"
#include "ldec/types.hpp"

namespace ldec {

enum class Condition { train_face, test_face, fixation, one_back, imagery };

std::string_view to_string(Condition c);
Condition parse_condition(std::string_view text);
bool has_stimulus(Condition c);

struct Trial {
  double onset_s = 0.0;
  double duration_s = 0.0;
  Condition condition = Condition::fixation;
  std::string stim_id;  // empty for fixation
};

using TrialTable = std::vector<Trial>;

// Onsets nondecreasing, durations positive, stim_id present iff the
// condition shows a stimulus. Throws ldec::Error naming the first bad row.
void validate_trials(const TrialTable& trials);

// Columns: onset_s, duration_s, condition, stim_id.
TrialTable read_trials(const std::filesystem::path& path);
void write_trials(const std::filesystem::path& path, const TrialTable& trials);

// Two-gamma response; times in seconds, dispersions are gamma scales.
struct HrfParams {
  double peak_delay_s = 6.0;
  double undershoot_delay_s = 16.0;
  double peak_dispersion = 1.0;
  double undershoot_dispersion = 1.0;
  double peak_undershoot_ratio = 6.0;
  double kernel_length_s = 32.0;
};

struct Hrf {
  HrfParams params;
  double dt_s = 0.0;
  std::vector<double> samples;  // samples[i] = h(i * dt_s), max == 1
};

// Continuous two-gamma formula before peak normalisation.
double two_gamma(double t_s, const HrfParams& params);

Hrf canonical_hrf(double dt_s, const HrfParams& params = {});

enum class RegressorRole { bias, latent, nuisance, condition, constant };

struct DesignMatrix {
  Matrix values;  // n_scans x n_regressors
  std::vector<std::string> names;
  std::vector<RegressorRole> roles;
  double tr_s = 2.0;

  Index n_scans() const { return values.rows(); }
  Index n_regressors() const { return values.cols(); }
  std::optional<Index> find(std::string_view name) const;
  Index column(std::string_view name) const;
  std::vector<Index> columns_with(RegressorRole role) const;
};

struct DesignOptions {
  int microtime_bins = 16;
  bool include_constant = true;
  std::optional<Matrix> motion;  // n_scans x n_motion nuisance columns
  HrfParams hrf;
};

// Column order: bias, latent_0..latent_{d-1} (when include_parametric),
// one_back, test:<id> and imagery:<id> per identity (first appearance order),
// motion_<i>, constant.
//
// Training-face trials drive the bias column and, scaled by each latent
// dimension, the parametric columns. One-back repeats only feed their own
// nuisance column. Every column is built on a microtime grid of
// tr_s / microtime_bins, convolved with the canonical HRF and sampled at the
// first bin of each scan. Amplitudes are integrals (seconds).
DesignMatrix build_design(const TrialTable& trials, const LatentTable& latents, Index n_scans, double tr_s,
                          bool include_parametric, const DesignOptions& options = {});

struct RankReport {
  Index rank = 0;
  Index n_regressors = 0;
  bool full_rank = false;
  Vector singular_values;
};

// Numerical rank: singular values above tolerance * largest.
RankReport check_full_rank(const Matrix& design, double tolerance = 1e-10);
RankReport check_full_rank(const DesignMatrix& design, double tolerance = 1e-10);

}  // namespace ldec
