#pragma once
// Voxel-wise linear encoding model and its inversion.
//
// Encoding:  Y = X W        (X: observations x regressors, W: regressors x voxels)
// Fit:       W = (X'X + ridge I)^-1 X'Y
// Decoding:  X = Y W' (W W')^-1
//
// Both systems are solved through Householder QR of the tall factor (X, or
// W'), never by forming and inverting the normal matrices.

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "ldec/design_matrix.hpp"
#include "ldec/latent_codec.hpp"
#include "ldec/types.hpp"

namespace ldec {

// Observations x voxels. Rows are scans (time series) or condition
// estimates (one row per stimulus).
struct BoldPatterns {
  Matrix values;
  std::vector<std::string> voxel_ids;
  std::vector<std::string> observation_ids;

  void validate() const;
  // Columns reordered to `voxel_ids`; throws if any id is missing.
  BoldPatterns aligned_to(const std::vector<std::string>& voxel_ids) const;
  BoldPatterns rows(Index first, Index count) const;
};

BoldPatterns load_bold(const std::filesystem::path& matrix_path);
void save_bold(const std::filesystem::path& matrix_path, const BoldPatterns& bold);

// Reciprocal condition number of the normal matrix below which fitting and
// decoding refuse to proceed.
inline constexpr double kMinReciprocalCondition = 1e-12;

// Full GLM solution, every regressor kept.
struct GlmFit {
  Matrix coefficients;  // n_regressors x n_voxels
  std::vector<std::string> regressor_names;
  std::vector<RegressorRole> roles;
  std::vector<std::string> voxel_ids;
  Vector rss;           // residual sum of squares per voxel
  Vector tss;           // total (mean-centred) sum of squares per voxel
  Index n_observations = 0;
  Matrix r_factor;      // upper-triangular R of the (augmented) design
  double ridge = 0.0;

  Index n_regressors() const { return coefficients.rows(); }
  // Predictors excluding the constant column.
  Index n_predictors() const;
  Vector r_squared() const;
  Index row(std::string_view name) const;
};

GlmFit fit_glm(const DesignMatrix& design, const BoldPatterns& bold, double ridge = 0.0);

// Per-voxel t statistic for a contrast over the regressors.
Vector contrast_t(const GlmFit& fit, const Vector& contrast);

// Rows of the condition regressors carrying `prefix` (e.g. "test:"), one per
// stimulus, as pattern estimates ready for decoding.
BoldPatterns condition_patterns(const GlmFit& fit, std::string_view prefix = "test:");

class EncodingModel {
 public:
  EncodingModel() = default;
  EncodingModel(Matrix weights, std::vector<std::string> regressor_names, std::vector<std::string> voxel_ids);

  const Matrix& weights() const { return weights_; }
  const std::vector<std::string>& regressor_names() const { return regressor_names_; }
  const std::vector<std::string>& voxel_ids() const { return voxel_ids_; }
  Index bias_index() const { return bias_index_; }
  Index n_regressors() const { return weights_.rows(); }
  Index n_voxels() const { return weights_.cols(); }
  // Weight rows of the latent dimensions, bias row removed.
  Matrix latent_weights() const;

  EncodingModel restrict_voxels(const std::vector<std::string>& voxel_ids) const;

 private:
  Matrix weights_;
  std::vector<std::string> regressor_names_;
  std::vector<std::string> voxel_ids_;
  Index bias_index_ = -1;
};

// Keeps the bias and latent rows of a GLM fit.
EncodingModel encoding_model(const GlmFit& fit);

// fit_glm followed by encoding_model.
EncodingModel fit_weights(const DesignMatrix& design, const BoldPatterns& bold, double ridge = 0.0);

void save_model(const std::filesystem::path& matrix_path, const EncodingModel& model);
EncodingModel load_model(const std::filesystem::path& matrix_path);

struct DecodedLatents {
  LatentTable latents;  // one row per pattern, bias excluded
  Vector bias;          // decoded bias component per pattern
};

// Holds the QR factorisation of W' so many pattern sets can be decoded
// against one model.
class LatentDecoder {
 public:
  explicit LatentDecoder(EncodingModel model);

  const EncodingModel& model() const { return model_; }
  double reciprocal_condition() const { return rcond_; }
  DecodedLatents decode(const BoldPatterns& patterns) const;

 private:
  EncodingModel model_;
  Eigen::HouseholderQR<Matrix> qr_;
  double rcond_ = 0.0;
};

DecodedLatents decode_latents(const EncodingModel& model, const BoldPatterns& patterns);

// Mean of member rows per group. `group_of` maps observation id -> group id;
// groups are emitted in first-appearance order unless `group_order` is given.
BoldPatterns average_patterns(const BoldPatterns& bold, const std::map<std::string, std::string>& group_of,
                              const std::vector<std::string>& group_order = {});

// Scan-level alternative to GLM betas: per-voxel demeaned time series,
// sampled at each trial's predicted response peak and averaged over repeats
// of the same stimulus.
BoldPatterns peak_aligned_patterns(const BoldPatterns& timeseries, const TrialTable& trials, double tr_s,
                                   Condition condition = Condition::test_face, int microtime_bins = 16);

}  // namespace ldec
