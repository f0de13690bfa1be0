#include "ldec/linear_decoder.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "ldec/error.hpp"
#include "ldec/io.hpp"

namespace ldec {

void BoldPatterns::validate() const {
  if (static_cast<Index>(voxel_ids.size()) != values.cols()) {
    throw Error("bold patterns: " + std::to_string(voxel_ids.size()) + " voxel ids for " +
                std::to_string(values.cols()) + " columns");
  }
  if (static_cast<Index>(observation_ids.size()) != values.rows()) {
    throw Error("bold patterns: " + std::to_string(observation_ids.size()) + " observation ids for " +
                std::to_string(values.rows()) + " rows");
  }
  if (!values.allFinite()) throw Error("bold patterns: non-finite values");
  std::unordered_set<std::string> seen;
  for (const auto& id : voxel_ids) {
    if (!seen.insert(id).second) throw Error("bold patterns: duplicate voxel id '" + id + "'");
  }
}

BoldPatterns BoldPatterns::aligned_to(const std::vector<std::string>& ids) const {
  if (ids == voxel_ids) return *this;
  std::unordered_map<std::string, Index> where;
  for (std::size_t i = 0; i < voxel_ids.size(); ++i) where.emplace(voxel_ids[i], static_cast<Index>(i));
  BoldPatterns out;
  out.values.resize(values.rows(), static_cast<Index>(ids.size()));
  for (std::size_t j = 0; j < ids.size(); ++j) {
    const auto it = where.find(ids[j]);
    if (it == where.end()) throw Error("bold patterns: voxel '" + ids[j] + "' missing from patterns");
    out.values.col(static_cast<Index>(j)) = values.col(it->second);
  }
  out.voxel_ids = ids;
  out.observation_ids = observation_ids;
  return out;
}

BoldPatterns BoldPatterns::rows(Index first, Index count) const {
  BoldPatterns out;
  out.values = values.middleRows(first, count);
  out.voxel_ids = voxel_ids;
  out.observation_ids.assign(observation_ids.begin() + first, observation_ids.begin() + first + count);
  return out;
}

BoldPatterns load_bold(const std::filesystem::path& matrix_path) {
  BoldPatterns bold;
  bold.values = io::read_matrix(matrix_path);
  bold.voxel_ids = io::read_ids(io::col_ids_path(matrix_path));
  const auto row_ids = io::row_ids_path(matrix_path);
  if (std::filesystem::exists(row_ids)) {
    bold.observation_ids = io::read_ids(row_ids);
  } else {
    for (Index i = 0; i < bold.values.rows(); ++i) bold.observation_ids.push_back(std::to_string(i));
  }
  bold.validate();
  return bold;
}

void save_bold(const std::filesystem::path& matrix_path, const BoldPatterns& bold) {
  bold.validate();
  io::write_matrix(matrix_path, bold.values);
  io::write_ids(io::col_ids_path(matrix_path), bold.voxel_ids);
  io::write_ids(io::row_ids_path(matrix_path), bold.observation_ids);
}

namespace {

// Singular values of an upper-triangular factor R, i.e. of the factored matrix.
Vector singular_values_of(const Matrix& r) {
  Eigen::BDCSVD<Matrix> svd(r);
  return svd.singularValues();
}

std::string describe_small(const Vector& s, double threshold) {
  std::ostringstream os;
  int shown = 0;
  for (Index i = s.size() - 1; i >= 0 && shown < 5; --i) {
    if (s(i) > threshold) break;
    os << (shown ? ", " : "") << "s[" << i << "]=" << io::format_number(s(i));
    ++shown;
  }
  return os.str();
}

}  // namespace

Index GlmFit::n_predictors() const {
  const auto constants = std::count(roles.begin(), roles.end(), RegressorRole::constant);
  return n_regressors() - static_cast<Index>(constants);
}

Vector GlmFit::r_squared() const {
  Vector r2(rss.size());
  for (Index v = 0; v < rss.size(); ++v) r2(v) = tss(v) > 0.0 ? 1.0 - rss(v) / tss(v) : 0.0;
  return r2;
}

Index GlmFit::row(std::string_view name) const {
  const auto it = std::find(regressor_names.begin(), regressor_names.end(), name);
  if (it == regressor_names.end()) throw Error("glm fit has no regressor '" + std::string(name) + "'");
  return static_cast<Index>(it - regressor_names.begin());
}

GlmFit fit_glm(const DesignMatrix& design, const BoldPatterns& bold, double ridge) {
  bold.validate();
  if (!(ridge >= 0.0) || !std::isfinite(ridge)) throw Error("fit: ridge must be a nonnegative finite number");
  const Index n = design.n_scans();
  const Index p = design.n_regressors();
  if (bold.values.rows() != n) {
    throw Error("fit: design has " + std::to_string(n) + " rows but bold has " + std::to_string(bold.values.rows()));
  }
  if (p == 0) throw Error("fit: design has no regressors");
  if (ridge == 0.0 && n < p) {
    throw Error("fit: " + std::to_string(n) + " observations cannot determine " + std::to_string(p) +
                " regressors without ridge");
  }

  Matrix a = design.values;
  Matrix y = bold.values;
  if (ridge > 0.0) {
    a.conservativeResize(n + p, p);
    a.bottomRows(p) = std::sqrt(ridge) * Matrix::Identity(p, p);
    y.conservativeResize(n + p, y.cols());
    y.bottomRows(p).setZero();
  }
  Eigen::HouseholderQR<Matrix> qr(a);
  Matrix r = qr.matrixQR().topLeftCorner(p, p).triangularView<Eigen::Upper>();
  const Vector s = singular_values_of(r);
  const double rcond = s(0) > 0.0 ? (s(p - 1) / s(0)) * (s(p - 1) / s(0)) : 0.0;
  if (!(rcond >= kMinReciprocalCondition)) {
    throw Error("fit: singular normal equations (reciprocal condition " + io::format_number(rcond) +
                "); offending singular values: " + describe_small(s, s(0) * std::sqrt(kMinReciprocalCondition)));
  }

  GlmFit fit;
  fit.coefficients = qr.solve(y);
  fit.regressor_names = design.names;
  fit.roles = design.roles;
  fit.voxel_ids = bold.voxel_ids;
  fit.n_observations = n;
  fit.r_factor = std::move(r);
  fit.ridge = ridge;
  const Matrix residual = bold.values - design.values * fit.coefficients;
  fit.rss = residual.colwise().squaredNorm().transpose();
  const Matrix centred = bold.values.rowwise() - bold.values.colwise().mean();
  fit.tss = centred.colwise().squaredNorm().transpose();
  return fit;
}

Vector contrast_t(const GlmFit& fit, const Vector& contrast) {
  if (contrast.size() != fit.n_regressors()) throw Error("contrast_t: contrast length mismatch");
  const Index df = fit.n_observations - fit.n_regressors();
  if (df <= 0) throw Error("contrast_t: no residual degrees of freedom");
  // c' (R'R)^-1 c = |R^-T c|^2
  const Vector w = fit.r_factor.transpose().triangularView<Eigen::Lower>().solve(contrast);
  const double scale = w.squaredNorm();
  const Vector effect = fit.coefficients.transpose() * contrast;
  Vector t(effect.size());
  for (Index v = 0; v < t.size(); ++v) {
    const double sigma2 = fit.rss(v) / static_cast<double>(df);
    t(v) = sigma2 > 0.0 ? effect(v) / std::sqrt(sigma2 * scale) : 0.0;
  }
  return t;
}

BoldPatterns condition_patterns(const GlmFit& fit, std::string_view prefix) {
  BoldPatterns out;
  std::vector<Index> rows;
  for (std::size_t i = 0; i < fit.regressor_names.size(); ++i) {
    const auto& name = fit.regressor_names[i];
    if (fit.roles[i] == RegressorRole::condition && name.starts_with(prefix)) {
      rows.push_back(static_cast<Index>(i));
      out.observation_ids.push_back(name.substr(prefix.size()));
    }
  }
  if (rows.empty()) throw Error("no condition regressors with prefix '" + std::string(prefix) + "'");
  out.values.resize(static_cast<Index>(rows.size()), fit.coefficients.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) out.values.row(static_cast<Index>(i)) = fit.coefficients.row(rows[i]);
  out.voxel_ids = fit.voxel_ids;
  return out;
}

EncodingModel::EncodingModel(Matrix weights, std::vector<std::string> regressor_names, std::vector<std::string> voxel_ids)
    : weights_(std::move(weights)), regressor_names_(std::move(regressor_names)), voxel_ids_(std::move(voxel_ids)) {
  if (static_cast<Index>(regressor_names_.size()) != weights_.rows()) {
    throw Error("encoding model: regressor name count does not match weight rows");
  }
  if (static_cast<Index>(voxel_ids_.size()) != weights_.cols()) {
    throw Error("encoding model: voxel id count does not match weight columns");
  }
  if (!weights_.allFinite()) throw Error("encoding model: non-finite weights");
  std::unordered_set<std::string> seen;
  for (const auto& id : voxel_ids_) {
    if (!seen.insert(id).second) throw Error("encoding model: duplicate voxel id '" + id + "'");
  }
  const auto it = std::find(regressor_names_.begin(), regressor_names_.end(), "bias");
  if (it == regressor_names_.end()) throw Error("encoding model: no 'bias' regressor row");
  bias_index_ = static_cast<Index>(it - regressor_names_.begin());
}

Matrix EncodingModel::latent_weights() const {
  Matrix out(weights_.rows() - 1, weights_.cols());
  Index k = 0;
  for (Index r = 0; r < weights_.rows(); ++r) {
    if (r != bias_index_) out.row(k++) = weights_.row(r);
  }
  return out;
}

EncodingModel EncodingModel::restrict_voxels(const std::vector<std::string>& ids) const {
  std::unordered_map<std::string, Index> where;
  for (std::size_t i = 0; i < voxel_ids_.size(); ++i) where.emplace(voxel_ids_[i], static_cast<Index>(i));
  Matrix w(weights_.rows(), static_cast<Index>(ids.size()));
  for (std::size_t j = 0; j < ids.size(); ++j) {
    const auto it = where.find(ids[j]);
    if (it == where.end()) throw Error("encoding model: unknown voxel '" + ids[j] + "'");
    w.col(static_cast<Index>(j)) = weights_.col(it->second);
  }
  return EncodingModel(std::move(w), regressor_names_, ids);
}

EncodingModel encoding_model(const GlmFit& fit) {
  std::vector<Index> keep;
  std::vector<std::string> names;
  for (std::size_t i = 0; i < fit.roles.size(); ++i) {
    if (fit.roles[i] == RegressorRole::bias || fit.roles[i] == RegressorRole::latent) {
      keep.push_back(static_cast<Index>(i));
      names.push_back(fit.regressor_names[i]);
    }
  }
  Matrix w(static_cast<Index>(keep.size()), fit.coefficients.cols());
  for (std::size_t i = 0; i < keep.size(); ++i) w.row(static_cast<Index>(i)) = fit.coefficients.row(keep[i]);
  return EncodingModel(std::move(w), std::move(names), fit.voxel_ids);
}

EncodingModel fit_weights(const DesignMatrix& design, const BoldPatterns& bold, double ridge) {
  return encoding_model(fit_glm(design, bold, ridge));
}

void save_model(const std::filesystem::path& matrix_path, const EncodingModel& model) {
  io::write_matrix(matrix_path, model.weights());
  io::write_ids(io::row_ids_path(matrix_path), model.regressor_names());
  io::write_ids(io::col_ids_path(matrix_path), model.voxel_ids());
}

EncodingModel load_model(const std::filesystem::path& matrix_path) {
  return EncodingModel(io::read_matrix(matrix_path), io::read_ids(io::row_ids_path(matrix_path)),
                       io::read_ids(io::col_ids_path(matrix_path)));
}

LatentDecoder::LatentDecoder(EncodingModel model) : model_(std::move(model)) {
  const Index p = model_.n_regressors();
  const Index v = model_.n_voxels();
  if (v < p) {
    throw Error("decode: " + std::to_string(v) + " voxels cannot determine " + std::to_string(p) +
                " regressors (need n_voxels >= n_regressors)");
  }
  qr_.compute(model_.weights().transpose());
  const Matrix r = qr_.matrixQR().topLeftCorner(p, p).triangularView<Eigen::Upper>();
  const Vector s = singular_values_of(r);
  rcond_ = s(0) > 0.0 ? (s(p - 1) / s(0)) * (s(p - 1) / s(0)) : 0.0;
  if (!(rcond_ >= kMinReciprocalCondition)) {
    throw Error("decode: W W' is singular (condition number " +
                (rcond_ > 0.0 ? io::format_number(1.0 / rcond_) : std::string("inf")) + ")");
  }
}

DecodedLatents LatentDecoder::decode(const BoldPatterns& patterns) const {
  patterns.validate();
  const BoldPatterns aligned = patterns.aligned_to(model_.voxel_ids());
  // Row-wise least squares  min |x W - y|  <=>  W' x' = y'.
  const Matrix solution = qr_.solve(aligned.values.transpose()).transpose();
  const Index bias = model_.bias_index();
  Matrix latents(solution.rows(), solution.cols() - 1);
  Index k = 0;
  for (Index c = 0; c < solution.cols(); ++c) {
    if (c != bias) latents.col(k++) = solution.col(c);
  }
  return DecodedLatents{LatentTable(aligned.observation_ids, std::move(latents)), solution.col(bias)};
}

DecodedLatents decode_latents(const EncodingModel& model, const BoldPatterns& patterns) {
  return LatentDecoder(model).decode(patterns);
}

BoldPatterns average_patterns(const BoldPatterns& bold, const std::map<std::string, std::string>& group_of,
                              const std::vector<std::string>& group_order) {
  bold.validate();
  std::vector<std::string> order = group_order;
  std::unordered_map<std::string, Index> slot;
  for (const auto& g : order) slot.emplace(g, static_cast<Index>(slot.size()));
  std::vector<Index> member_of(bold.observation_ids.size());
  for (std::size_t i = 0; i < bold.observation_ids.size(); ++i) {
    const auto it = group_of.find(bold.observation_ids[i]);
    if (it == group_of.end()) throw Error("average_patterns: observation '" + bold.observation_ids[i] + "' has no group");
    auto [pos, inserted] = slot.emplace(it->second, static_cast<Index>(slot.size()));
    if (inserted) {
      if (!group_order.empty()) throw Error("average_patterns: group '" + it->second + "' not in the group order");
      order.push_back(it->second);
    }
    member_of[i] = pos->second;
  }
  BoldPatterns out;
  out.values = Matrix::Zero(static_cast<Index>(order.size()), bold.values.cols());
  std::vector<Index> counts(order.size(), 0);
  for (std::size_t i = 0; i < member_of.size(); ++i) {
    out.values.row(member_of[i]) += bold.values.row(static_cast<Index>(i));
    ++counts[static_cast<std::size_t>(member_of[i])];
  }
  for (std::size_t g = 0; g < order.size(); ++g) {
    if (counts[g] == 0) throw Error("average_patterns: group '" + order[g] + "' is empty");
    out.values.row(static_cast<Index>(g)) /= static_cast<double>(counts[g]);
  }
  out.voxel_ids = bold.voxel_ids;
  out.observation_ids = std::move(order);
  return out;
}

BoldPatterns peak_aligned_patterns(const BoldPatterns& timeseries, const TrialTable& trials, double tr_s,
                                   Condition condition, int microtime_bins) {
  timeseries.validate();
  const Hrf hrf = canonical_hrf(tr_s / microtime_bins);
  const Matrix demeaned = timeseries.values.rowwise() - timeseries.values.colwise().mean();
  const Index n_scans = timeseries.values.rows();

  BoldPatterns picked;
  picked.voxel_ids = timeseries.voxel_ids;
  std::vector<Index> scans;
  std::map<std::string, std::string> group_of;
  for (const auto& t : trials) {
    if (t.condition != condition) continue;
    // Peak of the boxcar-convolved response, on the microtime grid.
    const auto width = std::max<long long>(1, std::llround(t.duration_s / hrf.dt_s));
    double best = -1.0;
    long long best_lag = 0;
    for (long long m = 0; m < width + static_cast<long long>(hrf.samples.size()); ++m) {
      double s = 0.0;
      for (long long j = 0; j < width; ++j) {
        const long long lag = m - j;
        if (lag >= 0 && lag < static_cast<long long>(hrf.samples.size())) s += hrf.samples[static_cast<std::size_t>(lag)];
      }
      if (s > best) {
        best = s;
        best_lag = m;
      }
    }
    const double peak_s = t.onset_s + static_cast<double>(best_lag) * hrf.dt_s;
    const auto scan = static_cast<Index>(std::llround(peak_s / tr_s));
    if (scan >= n_scans) continue;
    scans.push_back(scan);
    const std::string obs = std::to_string(scans.size() - 1);
    picked.observation_ids.push_back(obs);
    group_of.emplace(obs, t.stim_id);
  }
  if (scans.empty()) throw Error("peak_aligned_patterns: no trials of the requested condition inside the run");
  picked.values.resize(static_cast<Index>(scans.size()), demeaned.cols());
  for (std::size_t i = 0; i < scans.size(); ++i) picked.values.row(static_cast<Index>(i)) = demeaned.row(scans[i]);
  return average_patterns(picked, group_of);
}

}  // namespace ldec
