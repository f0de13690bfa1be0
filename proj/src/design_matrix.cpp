#include "ldec/design_matrix.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>

#include "ldec/error.hpp"
#include "ldec/io.hpp"
#include "ldec/simd/kernels.hpp"

namespace ldec {

std::string_view to_string(Condition c) {
  switch (c) {
    case Condition::train_face: return "train_face";
    case Condition::test_face: return "test_face";
    case Condition::fixation: return "fixation";
    case Condition::one_back: return "one_back";
    case Condition::imagery: return "imagery";
  }
  return "unknown";
}

Condition parse_condition(std::string_view text) {
  for (auto c : {Condition::train_face, Condition::test_face, Condition::fixation, Condition::one_back,
                 Condition::imagery}) {
    if (text == to_string(c)) return c;
  }
  throw Error("unknown trial condition '" + std::string(text) + "'");
}

bool has_stimulus(Condition c) { return c != Condition::fixation; }

void validate_trials(const TrialTable& trials) {
  for (std::size_t i = 0; i < trials.size(); ++i) {
    const auto& t = trials[i];
    const std::string where = "trial " + std::to_string(i);
    if (!std::isfinite(t.onset_s) || t.onset_s < 0.0) throw Error(where + ": onset must be finite and >= 0");
    if (!std::isfinite(t.duration_s) || t.duration_s <= 0.0) throw Error(where + ": duration must be > 0");
    if (i > 0 && t.onset_s < trials[i - 1].onset_s) throw Error(where + ": onsets must be nondecreasing");
    if (has_stimulus(t.condition) == t.stim_id.empty()) {
      throw Error(where + ": condition " + std::string(to_string(t.condition)) +
                  (t.stim_id.empty() ? " requires a stim_id" : " must not carry a stim_id"));
    }
  }
}

TrialTable read_trials(const std::filesystem::path& path) {
  const auto tsv = io::read_tsv(path);
  const auto c_onset = tsv.column("onset_s");
  const auto c_dur = tsv.column("duration_s");
  const auto c_cond = tsv.column("condition");
  const auto c_stim = tsv.column("stim_id");
  TrialTable trials;
  trials.reserve(tsv.rows.size());
  for (const auto& row : tsv.rows) {
    Trial t;
    t.onset_s = io::parse_number(row[c_onset], "onset_s");
    t.duration_s = io::parse_number(row[c_dur], "duration_s");
    t.condition = parse_condition(row[c_cond]);
    t.stim_id = row[c_stim];
    trials.push_back(std::move(t));
  }
  validate_trials(trials);
  return trials;
}

void write_trials(const std::filesystem::path& path, const TrialTable& trials) {
  io::TsvTable tsv;
  tsv.header = {"onset_s", "duration_s", "condition", "stim_id"};
  for (const auto& t : trials) {
    tsv.rows.push_back(
        {io::format_number(t.onset_s), io::format_number(t.duration_s), std::string(to_string(t.condition)), t.stim_id});
  }
  io::write_tsv(path, tsv);
}

namespace {

double gamma_density(double t, double shape, double scale) {
  if (t <= 0.0) return 0.0;
  return std::exp((shape - 1.0) * std::log(t) - t / scale - std::lgamma(shape) - shape * std::log(scale));
}

}  // namespace

double two_gamma(double t_s, const HrfParams& p) {
  return gamma_density(t_s, p.peak_delay_s / p.peak_dispersion, p.peak_dispersion) -
         gamma_density(t_s, p.undershoot_delay_s / p.undershoot_dispersion, p.undershoot_dispersion) /
             p.peak_undershoot_ratio;
}

Hrf canonical_hrf(double dt_s, const HrfParams& params) {
  if (!(dt_s > 0.0 && dt_s <= 1.0)) throw Error("canonical_hrf: dt must lie in (0, 1] seconds");
  if (!(params.peak_delay_s > 0 && params.undershoot_delay_s > 0 && params.peak_dispersion > 0 &&
        params.undershoot_dispersion > 0 && params.peak_undershoot_ratio > 0 && params.kernel_length_s > 0)) {
    throw Error("canonical_hrf: parameters must be positive");
  }
  Hrf hrf;
  hrf.params = params;
  hrf.dt_s = dt_s;
  const auto n = static_cast<std::size_t>(std::floor(params.kernel_length_s / dt_s + 1e-9)) + 1;
  hrf.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i) hrf.samples[i] = two_gamma(static_cast<double>(i) * dt_s, params);
  const double peak = *std::max_element(hrf.samples.begin(), hrf.samples.end());
  for (auto& v : hrf.samples) v /= peak;
  return hrf;
}

std::optional<Index> DesignMatrix::find(std::string_view name) const {
  const auto it = std::find(names.begin(), names.end(), name);
  if (it == names.end()) return std::nullopt;
  return static_cast<Index>(it - names.begin());
}

Index DesignMatrix::column(std::string_view name) const {
  if (auto c = find(name)) return *c;
  throw Error("design has no regressor named '" + std::string(name) + "'");
}

std::vector<Index> DesignMatrix::columns_with(RegressorRole role) const {
  std::vector<Index> out;
  for (std::size_t i = 0; i < roles.size(); ++i) {
    if (roles[i] == role) out.push_back(static_cast<Index>(i));
  }
  return out;
}

namespace {

// HRF-convolved response of one boxcar trial, sampled on the scan grid.
struct TrialResponse {
  Index first_scan = 0;
  std::vector<double> values;
};

TrialResponse trial_response(const Trial& t, const Hrf& hrf, int bins, Index n_scans) {
  const double dt = hrf.dt_s;
  const auto start = static_cast<long long>(std::llround(t.onset_s / dt));
  const auto width = std::max<long long>(1, std::llround(t.duration_s / dt));
  const auto taps = static_cast<long long>(hrf.samples.size());
  const long long last_bin = start + width - 1 + taps - 1;
  TrialResponse r;
  r.first_scan = static_cast<Index>((start + bins - 1) / bins);
  const Index last_scan = std::min<Index>(n_scans - 1, static_cast<Index>(last_bin / bins));
  for (Index k = r.first_scan; k <= last_scan; ++k) {
    const long long m = static_cast<long long>(k) * bins;
    double s = 0.0;
    for (long long j = start; j < start + width; ++j) {
      const long long lag = m - j;
      if (lag >= 0 && lag < taps) s += hrf.samples[static_cast<std::size_t>(lag)];
    }
    r.values.push_back(s * dt);
  }
  return r;
}

}  // namespace

DesignMatrix build_design(const TrialTable& trials, const LatentTable& latents, Index n_scans, double tr_s,
                          bool include_parametric, const DesignOptions& options) {
  validate_trials(trials);
  if (n_scans < 1) throw Error("build_design: n_scans must be positive");
  if (!(tr_s > 0.0)) throw Error("build_design: tr must be positive");
  if (options.microtime_bins < 1) throw Error("build_design: microtime_bins must be positive");
  const double window = static_cast<double>(n_scans) * tr_s;
  for (std::size_t i = 0; i < trials.size(); ++i) {
    if (trials[i].onset_s + trials[i].duration_s > window + 1e-9) {
      throw Error("build_design: trial " + std::to_string(i) + " (" + trials[i].stim_id + ") ends at " +
                  io::format_number(trials[i].onset_s + trials[i].duration_s) + " s, beyond the scan window of " +
                  io::format_number(window) + " s");
    }
  }
  if (options.motion && options.motion->rows() != n_scans) {
    throw Error("build_design: motion regressors have " + std::to_string(options.motion->rows()) +
                " rows, expected " + std::to_string(n_scans));
  }

  const Hrf hrf = canonical_hrf(tr_s / options.microtime_bins, options.hrf);
  const Index n_latent = include_parametric ? latents.n_dims() : 0;

  std::vector<Index> latent_rows(trials.size(), -1);
  bool any_one_back = false;
  std::vector<std::string> condition_names;
  std::map<std::string, Index> condition_column;
  for (std::size_t i = 0; i < trials.size(); ++i) {
    const auto& t = trials[i];
    if (t.condition == Condition::train_face && include_parametric) {
      const auto row = latents.find(t.stim_id);
      if (!row) throw Error("build_design: no latent code for training stimulus '" + t.stim_id + "'");
      latent_rows[i] = *row;
    }
    any_one_back = any_one_back || t.condition == Condition::one_back;
    if (t.condition == Condition::test_face || t.condition == Condition::imagery) {
      const std::string name = std::string(t.condition == Condition::test_face ? "test:" : "imagery:") + t.stim_id;
      if (condition_column.emplace(name, 0).second) condition_names.push_back(name);
    }
  }

  DesignMatrix d;
  d.tr_s = tr_s;
  d.names.push_back("bias");
  d.roles.push_back(RegressorRole::bias);
  for (Index j = 0; j < n_latent; ++j) {
    d.names.push_back("latent_" + std::to_string(j));
    d.roles.push_back(RegressorRole::latent);
  }
  const Index one_back_col = any_one_back ? static_cast<Index>(d.names.size()) : -1;
  if (any_one_back) {
    d.names.push_back("one_back");
    d.roles.push_back(RegressorRole::nuisance);
  }
  for (const auto& name : condition_names) {
    condition_column[name] = static_cast<Index>(d.names.size());
    d.names.push_back(name);
    d.roles.push_back(RegressorRole::condition);
  }
  const Index motion_cols = options.motion ? options.motion->cols() : 0;
  const Index motion_first = static_cast<Index>(d.names.size());
  for (Index j = 0; j < motion_cols; ++j) {
    d.names.push_back("motion_" + std::to_string(j));
    d.roles.push_back(RegressorRole::nuisance);
  }
  if (options.include_constant) {
    d.names.push_back("constant");
    d.roles.push_back(RegressorRole::constant);
  }

  d.values = Matrix::Zero(n_scans, static_cast<Index>(d.names.size()));
  // Parametric block accumulated row-major so each scan's latent row is contiguous.
  std::vector<double> parametric(static_cast<std::size_t>(n_scans * n_latent), 0.0);

  for (std::size_t i = 0; i < trials.size(); ++i) {
    const auto& t = trials[i];
    if (t.condition == Condition::fixation) continue;
    const auto r = trial_response(t, hrf, options.microtime_bins, n_scans);
    Index col = -1;
    switch (t.condition) {
      case Condition::train_face: col = 0; break;
      case Condition::one_back: col = one_back_col; break;
      case Condition::test_face: col = condition_column.at("test:" + t.stim_id); break;
      case Condition::imagery: col = condition_column.at("imagery:" + t.stim_id); break;
      case Condition::fixation: break;
    }
    for (std::size_t k = 0; k < r.values.size(); ++k) d.values(r.first_scan + static_cast<Index>(k), col) += r.values[k];
    if (latent_rows[i] >= 0 && n_latent > 0) {
      const Vector code = latents.row(latent_rows[i]);
      for (std::size_t k = 0; k < r.values.size(); ++k) {
        const auto scan = static_cast<std::size_t>(r.first_scan) + k;
        simd::axpy(r.values[k], std::span<const double>(code.data(), static_cast<std::size_t>(n_latent)),
                   std::span<double>(parametric.data() + scan * static_cast<std::size_t>(n_latent),
                                     static_cast<std::size_t>(n_latent)));
      }
    }
  }
  for (Index s = 0; s < n_scans; ++s) {
    for (Index j = 0; j < n_latent; ++j) d.values(s, 1 + j) = parametric[static_cast<std::size_t>(s * n_latent + j)];
  }
  if (motion_cols > 0) d.values.middleCols(motion_first, motion_cols) = *options.motion;
  if (options.include_constant) d.values.col(d.values.cols() - 1).setOnes();
  if (!d.values.allFinite()) throw Error("build_design: non-finite design entries");
  return d;
}

RankReport check_full_rank(const Matrix& design, double tolerance) {
  RankReport report;
  report.n_regressors = design.cols();
  if (design.size() == 0) return report;
  Eigen::BDCSVD<Matrix> svd(design);
  report.singular_values = svd.singularValues();
  const double largest = report.singular_values.size() ? report.singular_values(0) : 0.0;
  for (Index i = 0; i < report.singular_values.size(); ++i) {
    if (report.singular_values(i) > tolerance * largest) ++report.rank;
  }
  report.full_rank = report.rank == report.n_regressors;
  return report;
}

RankReport check_full_rank(const DesignMatrix& design, double tolerance) {
  return check_full_rank(design.values, tolerance);
}

}  // namespace ldec
