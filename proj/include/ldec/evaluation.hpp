#pragma once
// Decoding quality: identification ranks and recognition accuracies,
// attribute classification and voxel maps, commonality analysis across
// regions, and SSIM between images.

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ldec/latent_codec.hpp"
#include "ldec/linear_decoder.hpp"
#include "ldec/stats.hpp"
#include "ldec/types.hpp"

namespace ldec {

// 1 + number of candidates correlating strictly better with the estimate
// than the target, plus half the number of exact ties (midrank).
double rank_against_candidates(const Vector& estimate, const LatentTable& candidates, std::string_view target_id);

struct RecognitionOptions {
  std::uint64_t n_draws = 1'000'000;
  std::uint64_t seed = 1;
  bool with_p_values = true;
};

struct RecognitionReport {
  std::vector<std::string> ids;
  std::vector<double> ranks;  // per item, in [1, n_candidates]
  int n_candidates = 0;
  double pairwise_accuracy = 0.0;  // mean of (n - rank) / (n - 1)
  double full_accuracy = 0.0;      // fraction of items ranked first
  int full_successes = 0;
  stats::TestResult p_pairwise;  // uniform-rank Monte-Carlo surrogate
  stats::TestResult p_full;      // binomial, p0 = 1/n
};

// Every estimate is ranked among all truth codes.
RecognitionReport recognition_report(const LatentTable& estimates, const LatentTable& truth,
                                     const RecognitionOptions& options = {});

enum class AttributeLabel { positive, negative, tie };

std::string_view to_string(AttributeLabel label);

std::vector<AttributeLabel> classify_attribute(const LatentTable& codes, const AttributeVector& attr);

struct ClassificationScore {
  int correct = 0;
  int total = 0;
  double accuracy = 0.0;
  stats::TestResult p_value;  // binomial against 1/2
};

// Ties count as errors.
ClassificationScore score_classification(const std::vector<AttributeLabel>& predicted,
                                         const std::vector<bool>& truly_positive);

// Pearson correlation of each voxel's latent weights (bias row dropped) with
// the attribute vector; std::nullopt where a voxel's weights are constant.
std::vector<std::optional<double>> attribute_voxel_map(const EncodingModel& model, const AttributeVector& attr);

// Commonality analysis of ground-truth variance explained by three sets of
// region-wise predictions (A = occipital, B = temporal, C = frontoparietal).
struct VariancePartition {
  double r2_full = 0.0;
  double unique_occ = 0.0;
  double unique_temp = 0.0;
  double unique_fp = 0.0;
  double shared_occ_temp = 0.0;
  double shared_occ_fp = 0.0;
  double shared_temp_fp = 0.0;
  double shared_all = 0.0;
  // Mean R^2 of the seven subset regressions, in the order
  // A, B, C, AB, AC, BC, ABC.
  std::array<double, 7> subset_r2{};
  bool used_pseudo_inverse = false;

  double cell_sum() const;
};

// For each latent dimension, regress truth on the matching column of every
// subset of predictions (with intercept); R^2 is averaged over dimensions.
VariancePartition variance_partition(const LatentTable& truth, const LatentTable& pred_occ,
                                     const LatentTable& pred_temp, const LatentTable& pred_fp);

struct SsimOptions {
  double dynamic_range = 1.0;
  double k1 = 0.01;
  double k2 = 0.03;
  int window = 11;
  double sigma = 1.5;
};

// Mean SSIM over all fully contained Gaussian windows.
double ssim(const Matrix& image_a, const Matrix& image_b, const SsimOptions& options = {});

std::vector<double> gaussian_window(int size, double sigma);

}  // namespace ldec
