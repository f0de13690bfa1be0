#include "ldec/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <span>

#include "ldec/error.hpp"
#include "ldec/simd/kernels.hpp"

namespace ldec {
namespace {

std::span<const double> as_span(const Vector& v) { return {v.data(), static_cast<std::size_t>(v.size())}; }

}  // namespace

double rank_against_candidates(const Vector& estimate, const LatentTable& candidates, std::string_view target_id) {
  const Index target = candidates.index_of(target_id);
  if (estimate.size() != candidates.n_dims()) throw Error("rank_against_candidates: dimension mismatch");
  std::vector<double> r(static_cast<std::size_t>(candidates.size()));
  for (Index c = 0; c < candidates.size(); ++c) {
    const Vector cand = candidates.row(c);
    r[static_cast<std::size_t>(c)] = stats::pearson(as_span(estimate), as_span(cand));
  }
  const double rt = r[static_cast<std::size_t>(target)];
  double rank = 1.0;
  for (Index c = 0; c < candidates.size(); ++c) {
    if (c == target) continue;
    const double rc = r[static_cast<std::size_t>(c)];
    if (rc > rt) rank += 1.0;
    else if (rc == rt) rank += 0.5;
  }
  return rank;
}

RecognitionReport recognition_report(const LatentTable& estimates, const LatentTable& truth,
                                     const RecognitionOptions& options) {
  const Index n = truth.size();
  if (n < 2) throw Error("recognition_report: need at least 2 items");
  if (estimates.size() != n) throw Error("recognition_report: estimates and truth differ in item count");
  if (estimates.n_dims() != truth.n_dims()) throw Error("recognition_report: estimates and truth differ in n_dims");
  RecognitionReport report;
  report.n_candidates = static_cast<int>(n);
  double pairwise = 0.0;
  for (Index i = 0; i < n; ++i) {
    const auto& id = estimates.ids()[static_cast<std::size_t>(i)];
    if (!truth.find(id)) throw Error("recognition_report: no ground truth for '" + id + "'");
    const double rank = rank_against_candidates(estimates.row(i), truth, id);
    report.ids.push_back(id);
    report.ranks.push_back(rank);
    pairwise += stats::pairwise_accuracy_from_rank(rank, report.n_candidates);
    if (rank == 1.0) ++report.full_successes;
  }
  report.pairwise_accuracy = pairwise / static_cast<double>(n);
  report.full_accuracy = static_cast<double>(report.full_successes) / static_cast<double>(n);
  if (options.with_p_values) {
    report.p_pairwise = stats::monte_carlo_pairwise_p(report.pairwise_accuracy, static_cast<int>(n),
                                                      report.n_candidates, options.n_draws, options.seed);
    report.p_full = stats::binomial_tail_p(report.full_successes, static_cast<int>(n), 1.0 / static_cast<double>(n));
  }
  return report;
}

std::string_view to_string(AttributeLabel label) {
  switch (label) {
    case AttributeLabel::positive: return "positive";
    case AttributeLabel::negative: return "negative";
    case AttributeLabel::tie: return "tie";
  }
  return "tie";
}

std::vector<AttributeLabel> classify_attribute(const LatentTable& codes, const AttributeVector& attr) {
  if (codes.n_dims() != attr.vector.size()) throw Error("classify_attribute: dimension mismatch");
  if (attr.vector.isZero(0.0)) throw Error("classify_attribute: attribute vector is zero");
  std::vector<AttributeLabel> labels;
  labels.reserve(static_cast<std::size_t>(codes.size()));
  for (Index i = 0; i < codes.size(); ++i) {
    const Vector code = codes.row(i);
    const double projection = simd::dot(as_span(code), as_span(attr.vector));
    labels.push_back(projection > 0.0   ? AttributeLabel::positive
                     : projection < 0.0 ? AttributeLabel::negative
                                        : AttributeLabel::tie);
  }
  return labels;
}

ClassificationScore score_classification(const std::vector<AttributeLabel>& predicted,
                                         const std::vector<bool>& truly_positive) {
  if (predicted.size() != truly_positive.size()) throw Error("score_classification: length mismatch");
  if (predicted.empty()) throw Error("score_classification: nothing to score");
  ClassificationScore score;
  score.total = static_cast<int>(predicted.size());
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    const auto want = truly_positive[i] ? AttributeLabel::positive : AttributeLabel::negative;
    if (predicted[i] == want) ++score.correct;
  }
  score.accuracy = static_cast<double>(score.correct) / score.total;
  score.p_value = stats::binomial_tail_p(score.correct, score.total, 0.5);
  return score;
}

std::vector<std::optional<double>> attribute_voxel_map(const EncodingModel& model, const AttributeVector& attr) {
  if (attr.vector.size() != model.n_regressors() - 1) {
    throw Error("attribute_voxel_map: attribute has " + std::to_string(attr.vector.size()) +
                " dims, model has " + std::to_string(model.n_regressors() - 1) + " latent rows");
  }
  const Matrix w = model.latent_weights();
  std::vector<std::optional<double>> out;
  out.reserve(static_cast<std::size_t>(w.cols()));
  for (Index v = 0; v < w.cols(); ++v) {
    const Vector column = w.col(v);
    try {
      out.emplace_back(stats::pearson(as_span(column), as_span(attr.vector)));
    } catch (const Error&) {
      out.emplace_back(std::nullopt);
    }
  }
  return out;
}

double VariancePartition::cell_sum() const {
  return unique_occ + unique_temp + unique_fp + shared_occ_temp + shared_occ_fp + shared_temp_fp + shared_all;
}

VariancePartition variance_partition(const LatentTable& truth, const LatentTable& pred_occ,
                                     const LatentTable& pred_temp, const LatentTable& pred_fp) {
  const Index n = truth.size();
  const Index dims = truth.n_dims();
  if (n <= 3) throw Error("variance_partition: need more than 3 items");
  const std::array<const LatentTable*, 3> preds{&pred_occ, &pred_temp, &pred_fp};
  std::array<LatentTable, 3> aligned;
  for (std::size_t k = 0; k < 3; ++k) {
    if (preds[k]->size() != n || preds[k]->n_dims() != dims) {
      throw Error("variance_partition: prediction tables must match the truth table's shape");
    }
    aligned[k] = preds[k]->select(truth.ids());
  }
  // Subset masks over {A, B, C}, in the order A, B, C, AB, AC, BC, ABC.
  static constexpr std::array<unsigned, 7> masks{0b001, 0b010, 0b100, 0b011, 0b101, 0b110, 0b111};
  VariancePartition out;
  for (Index d = 0; d < dims; ++d) {
    const Vector y = truth.codes().col(d);
    const double tss = (y.array() - y.mean()).square().sum();
    if (!(tss > 0.0)) throw Error("variance_partition: ground-truth dimension " + std::to_string(d) + " is constant");
    for (std::size_t s = 0; s < masks.size(); ++s) {
      Matrix x(n, 1);
      x.col(0).setOnes();
      for (std::size_t k = 0; k < 3; ++k) {
        if (masks[s] & (1u << k)) {
          x.conservativeResize(Eigen::NoChange, x.cols() + 1);
          x.col(x.cols() - 1) = aligned[k].codes().col(d);
        }
      }
      Eigen::CompleteOrthogonalDecomposition<Matrix> cod(x);
      if (cod.rank() < x.cols()) out.used_pseudo_inverse = true;
      const Vector beta = cod.solve(y);
      const double rss = (y - x * beta).squaredNorm();
      out.subset_r2[s] += std::clamp(1.0 - rss / tss, 0.0, 1.0);
    }
  }
  for (auto& r : out.subset_r2) r /= static_cast<double>(dims);
  const auto& r = out.subset_r2;
  const double a = r[0], b = r[1], c = r[2], ab = r[3], ac = r[4], bc = r[5], abc = r[6];
  out.r2_full = abc;
  out.unique_occ = abc - bc;
  out.unique_temp = abc - ac;
  out.unique_fp = abc - ab;
  out.shared_occ_temp = ac + bc - c - abc;
  out.shared_occ_fp = ab + bc - b - abc;
  out.shared_temp_fp = ab + ac - a - abc;
  out.shared_all = a + b + c - ab - ac - bc + abc;
  return out;
}

std::vector<double> gaussian_window(int size, double sigma) {
  if (size < 1 || !(sigma > 0.0)) throw Error("gaussian_window: invalid size or sigma");
  std::vector<double> w(static_cast<std::size_t>(size));
  const double centre = (size - 1) / 2.0;
  double total = 0.0;
  for (int i = 0; i < size; ++i) {
    const double d = i - centre;
    w[static_cast<std::size_t>(i)] = std::exp(-d * d / (2.0 * sigma * sigma));
    total += w[static_cast<std::size_t>(i)];
  }
  for (auto& v : w) v /= total;
  return w;
}

namespace {

// Separable "valid" filtering: columns first, then rows.
Matrix filter_valid(const Matrix& image, const std::vector<double>& taps) {
  const Index m = static_cast<Index>(taps.size());
  const Index rows = image.rows() - m + 1;
  const Index cols = image.cols() - m + 1;
  Matrix pass1(rows, image.cols());
  for (Index c = 0; c < image.cols(); ++c) {
    simd::correlate_valid({image.col(c).data(), static_cast<std::size_t>(image.rows())}, taps,
                          {pass1.col(c).data(), static_cast<std::size_t>(rows)});
  }
  const Matrix pass1_t = pass1.transpose();
  Matrix out_t(cols, rows);
  for (Index r = 0; r < rows; ++r) {
    simd::correlate_valid({pass1_t.col(r).data(), static_cast<std::size_t>(pass1_t.rows())}, taps,
                          {out_t.col(r).data(), static_cast<std::size_t>(cols)});
  }
  return out_t.transpose();
}

}  // namespace

double ssim(const Matrix& image_a, const Matrix& image_b, const SsimOptions& options) {
  if (image_a.rows() != image_b.rows() || image_a.cols() != image_b.cols()) throw Error("ssim: image size mismatch");
  if (image_a.rows() < options.window || image_a.cols() < options.window) {
    throw Error("ssim: images must be at least " + std::to_string(options.window) + "x" +
                std::to_string(options.window));
  }
  if (!(options.dynamic_range > 0.0)) throw Error("ssim: dynamic range must be positive");
  if (!image_a.allFinite() || !image_b.allFinite()) throw Error("ssim: non-finite pixels");
  const auto taps = gaussian_window(options.window, options.sigma);
  const double c1 = (options.k1 * options.dynamic_range) * (options.k1 * options.dynamic_range);
  const double c2 = (options.k2 * options.dynamic_range) * (options.k2 * options.dynamic_range);

  const Matrix mu_a = filter_valid(image_a, taps);
  const Matrix mu_b = filter_valid(image_b, taps);
  const Matrix e_aa = filter_valid(image_a.cwiseProduct(image_a), taps);
  const Matrix e_bb = filter_valid(image_b.cwiseProduct(image_b), taps);
  const Matrix e_ab = filter_valid(image_a.cwiseProduct(image_b), taps);

  double total = 0.0;
  for (Index j = 0; j < mu_a.cols(); ++j) {
    for (Index i = 0; i < mu_a.rows(); ++i) {
      const double ma = mu_a(i, j);
      const double mb = mu_b(i, j);
      const double var_a = e_aa(i, j) - ma * ma;
      const double var_b = e_bb(i, j) - mb * mb;
      const double cov = e_ab(i, j) - ma * mb;
      total += ((2.0 * ma * mb + c1) * (2.0 * cov + c2)) / ((ma * ma + mb * mb + c1) * (var_a + var_b + c2));
    }
  }
  return total / static_cast<double>(mu_a.size());
}

}  // namespace ldec
