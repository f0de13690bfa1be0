#include "ldec/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <random>
#include <thread>

#include "ldec/error.hpp"
#include "ldec/stats.hpp"

namespace ldec {

std::string_view to_string(TestPatternMode mode) {
  return mode == TestPatternMode::glm_beta ? "glm_beta" : "peak_average";
}

TestPatternMode parse_test_pattern_mode(std::string_view text) {
  if (text == "glm_beta") return TestPatternMode::glm_beta;
  if (text == "peak_average") return TestPatternMode::peak_average;
  throw Error("test pattern mode must be 'glm_beta' or 'peak_average', got '" + std::string(text) + "'");
}

void SimConfig::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw Error(std::string("sim config: ") + what);
  };
  require(n_train_stimuli > 0 && n_test_stimuli > 0 && n_latent_dims > 0 && n_voxels > 0,
          "stimulus, latent and voxel counts must be positive");
  require(n_test_stimuli >= 2, "need at least 2 test stimuli");
  require(n_voxels >= n_latent_dims + 1, "n_voxels must be >= n_latent_dims + 1 for decoding");
  require(tr_s > 0 && stim_duration_s > 0 && isi_s > 0, "durations must be positive");
  require(noise_sigma >= 0 && std::isfinite(noise_sigma), "noise_sigma must be nonnegative");
  require(test_repeats > 0, "test_repeats must be positive");
  require(gender_separation >= 0 && std::isfinite(gender_separation), "gender_separation must be nonnegative");
  require(signal_scale >= 0 && std::isfinite(signal_scale), "signal_scale must be nonnegative");
  require(fixation_ratio >= 0 && one_back_ratio >= 0, "trial ratios must be nonnegative");
  require(lead_in_s >= 0 && tail_s >= 0, "lead-in and tail must be nonnegative");
  require(microtime_bins >= 1, "microtime_bins must be positive");
  require(ridge >= 0, "ridge must be nonnegative");
  for (double g : region_gain) require(g >= 0 && std::isfinite(g), "region gains must be nonnegative");
}

namespace {

enum Stream : std::uint64_t { kLatents = 1, kWeights, kTrials, kNoise, kAxis, kNuisance };

std::string padded(std::string_view prefix, int i, int width) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%0*d", width, i);
  return std::string(prefix) + buf;
}

int digits_for(int n) { return std::max(2, static_cast<int>(std::to_string(std::max(n - 1, 0)).size())); }

Matrix normal_matrix(Index rows, Index cols, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  Matrix m(rows, cols);
  for (Index r = 0; r < rows; ++r) {
    for (Index c = 0; c < cols; ++c) m(r, c) = normal(rng);
  }
  return m;
}

VoxelSet grid_voxels(int n) {
  const int side = static_cast<int>(std::ceil(std::cbrt(static_cast<double>(n)) - 1e-9));
  VoxelSet set;
  const int width = digits_for(n);
  for (int i = 0; i < n; ++i) {
    Voxel v;
    v.id = padded("v", i, width);
    v.x_mm = 3.0 * (i % side);
    v.y_mm = 3.0 * ((i / side) % side);
    v.z_mm = 3.0 * (i / (side * side));
    set.voxels.push_back(std::move(v));
  }
  return n >= 3 ? segment_regions(std::move(set)) : set;
}

}  // namespace

SimulatedSubject simulate_subject(const SimConfig& config) {
  config.validate();
  const int d = config.n_latent_dims;
  const auto seed = config.seed;
  SimulatedSubject sim;
  auto& truth = sim.truth;

  // Latent codes and gender labels.
  {
    std::mt19937_64 axis_rng(stats::derive_seed(seed, kAxis));
    truth.gender_axis = normal_matrix(d, 1, axis_rng).col(0);
    truth.gender_axis.normalize();

    std::mt19937_64 rng(stats::derive_seed(seed, kLatents));
    auto make = [&](int n, std::string_view prefix, std::vector<bool>& male) {
      Matrix codes = normal_matrix(n, d, rng);
      std::vector<std::string> ids;
      const int width = digits_for(n);
      for (int i = 0; i < n; ++i) {
        ids.push_back(padded(prefix, i, width));
        male.push_back(i % 2 == 0);
        const double shift = (male.back() ? 0.5 : -0.5) * config.gender_separation;
        codes.row(i) += shift * truth.gender_axis.transpose();
      }
      return LatentTable(std::move(ids), std::move(codes));
    };
    truth.train_latents = make(config.n_train_stimuli, "train_", truth.train_male);
    truth.test_latents = make(config.n_test_stimuli, "test_", truth.test_male);
  }

  truth.voxels = grid_voxels(config.n_voxels);
  std::vector<std::string> voxel_ids = truth.voxels.ids();

  {
    std::mt19937_64 rng(stats::derive_seed(seed, kWeights));
    truth.w_star = normal_matrix(d + 1, config.n_voxels, rng) / std::sqrt(static_cast<double>(d + 1));
    for (int v = 0; v < config.n_voxels; ++v) {
      const auto region = truth.voxels.voxels[static_cast<std::size_t>(v)].region;
      const double gain = region == Region::occipital        ? config.region_gain[0]
                          : region == Region::temporal       ? config.region_gain[1]
                          : region == Region::frontoparietal ? config.region_gain[2]
                                                             : 1.0;
      truth.w_star.col(v) *= config.signal_scale * gain;
    }
    std::mt19937_64 nuisance(stats::derive_seed(seed, kNuisance));
    truth.one_back_response =
        normal_matrix(config.n_voxels, 1, nuisance).col(0) * (config.signal_scale / std::sqrt(static_cast<double>(d + 1)));
    truth.baseline = Vector::Constant(config.n_voxels, config.baseline) + normal_matrix(config.n_voxels, 1, nuisance).col(0);
  }

  // Trial sequence: training faces once, test faces repeatedly, fixation
  // trials, and one-back repeats right after randomly chosen training faces.
  {
    std::mt19937_64 rng(stats::derive_seed(seed, kTrials));
    std::vector<Trial> order;
    for (const auto& id : truth.train_latents.ids()) order.push_back({0, 0, Condition::train_face, id});
    for (int r = 0; r < config.test_repeats; ++r) {
      for (const auto& id : truth.test_latents.ids()) order.push_back({0, 0, Condition::test_face, id});
    }
    const auto n_faces = static_cast<double>(order.size());
    const auto n_fix = static_cast<int>(std::llround(config.fixation_ratio * n_faces));
    for (int i = 0; i < n_fix; ++i) order.push_back({0, 0, Condition::fixation, ""});
    std::shuffle(order.begin(), order.end(), rng);

    std::vector<std::size_t> train_positions;
    for (std::size_t i = 0; i < order.size(); ++i) {
      if (order[i].condition == Condition::train_face) train_positions.push_back(i);
    }
    std::shuffle(train_positions.begin(), train_positions.end(), rng);
    const auto n_one_back = std::min<std::size_t>(
        train_positions.size(), static_cast<std::size_t>(std::llround(config.one_back_ratio * config.n_train_stimuli)));
    std::vector<bool> repeat_after(order.size(), false);
    for (std::size_t i = 0; i < n_one_back; ++i) repeat_after[train_positions[i]] = true;

    const double step = config.stim_duration_s + config.isi_s;
    double onset = config.lead_in_s;
    for (std::size_t i = 0; i < order.size(); ++i) {
      Trial t = order[i];
      t.onset_s = onset;
      t.duration_s = config.stim_duration_s;
      sim.trials.push_back(t);
      onset += step;
      if (repeat_after[i]) {
        sim.trials.push_back({onset, config.stim_duration_s, Condition::one_back, t.stim_id});
        onset += step;
      }
    }
  }

  const double run_end = sim.trials.back().onset_s + config.stim_duration_s + config.tail_s;
  const auto n_scans = static_cast<Index>(std::ceil(run_end / config.tr_s - 1e-9));

  // Generative design: test faces drive the same latent pathway as training faces.
  TrialTable generative = sim.trials;
  for (auto& t : generative) {
    if (t.condition == Condition::test_face) t.condition = Condition::train_face;
  }
  std::vector<std::string> all_ids = truth.train_latents.ids();
  all_ids.insert(all_ids.end(), truth.test_latents.ids().begin(), truth.test_latents.ids().end());
  Matrix all_codes(truth.train_latents.size() + truth.test_latents.size(), d);
  all_codes << truth.train_latents.codes(), truth.test_latents.codes();
  const LatentTable all_latents(std::move(all_ids), std::move(all_codes));

  DesignOptions options;
  options.microtime_bins = config.microtime_bins;
  const DesignMatrix g = build_design(generative, all_latents, n_scans, config.tr_s, true, options);

  // Coefficients in the generative design's column order.
  Matrix coefficients = Matrix::Zero(g.n_regressors(), config.n_voxels);
  coefficients.topRows(d + 1) = truth.w_star;
  if (auto c = g.find("one_back")) coefficients.row(*c) = truth.one_back_response.transpose();
  coefficients.row(g.column("constant")) = truth.baseline.transpose();

  sim.bold.values = g.values * coefficients;
  if (config.noise_sigma > 0.0) {
    std::mt19937_64 rng(stats::derive_seed(seed, kNoise));
    std::normal_distribution<double> normal;
    for (Index s = 0; s < sim.bold.values.rows(); ++s) {
      for (Index v = 0; v < sim.bold.values.cols(); ++v) sim.bold.values(s, v) += config.noise_sigma * normal(rng);
    }
  }
  sim.bold.voxel_ids = std::move(voxel_ids);
  for (Index s = 0; s < n_scans; ++s) sim.bold.observation_ids.push_back(std::to_string(s));
  return sim;
}

namespace {

// Drops all-zero nuisance and condition columns (absent from a prefix).
DesignMatrix drop_empty_columns(const DesignMatrix& design) {
  std::vector<Index> keep;
  for (Index c = 0; c < design.n_regressors(); ++c) {
    const auto role = design.roles[static_cast<std::size_t>(c)];
    const bool optional = role == RegressorRole::nuisance || role == RegressorRole::condition;
    if (!optional || !design.values.col(c).isZero(0.0)) keep.push_back(c);
  }
  DesignMatrix out;
  out.tr_s = design.tr_s;
  out.values.resize(design.n_scans(), static_cast<Index>(keep.size()));
  for (std::size_t i = 0; i < keep.size(); ++i) {
    out.values.col(static_cast<Index>(i)) = design.values.col(keep[i]);
    out.names.push_back(design.names[static_cast<std::size_t>(keep[i])]);
    out.roles.push_back(design.roles[static_cast<std::size_t>(keep[i])]);
  }
  return out;
}

}  // namespace

PipelineResult run_pipeline(const SimulatedSubject& subject, const SimConfig& config, const PipelineOptions& options) {
  if (!(options.training_fraction > 0.0 && options.training_fraction <= 1.0)) {
    throw Error("pipeline: training fraction must lie in (0, 1]");
  }
  const auto& truth = subject.truth;
  DesignOptions design_options;
  design_options.microtime_bins = config.microtime_bins;
  const Index n_scans = subject.bold.values.rows();

  PipelineResult result;
  result.design = build_design(subject.trials, truth.train_latents, n_scans, config.tr_s, true, design_options);
  const GlmFit full_fit = fit_glm(result.design, subject.bold, config.ridge);

  // Prefix of the run containing the first k training trials.
  const int n_train_total = static_cast<int>(
      std::count_if(subject.trials.begin(), subject.trials.end(),
                    [](const Trial& t) { return t.condition == Condition::train_face; }));
  const int k = std::max(1, static_cast<int>(std::ceil(options.training_fraction * n_train_total - 1e-9)));
  result.n_training_trials = k;
  if (k >= n_train_total) {
    result.model = encoding_model(full_fit);
  } else {
    // k trials span at most k design directions, so W is rank deficient.
    if (config.ridge == 0.0 && k < config.n_latent_dims + 1) {
      throw Error("pipeline: fraction " + std::to_string(options.training_fraction) + " leaves " + std::to_string(k) +
                  " training trials for " + std::to_string(config.n_latent_dims + 1) + " regressors; the weights are not identifiable");
    }
    int seen = 0;
    double cut_s = subject.trials.back().onset_s;
    for (const auto& t : subject.trials) {
      if (t.condition != Condition::train_face) continue;
      if (++seen == k + 1) {
        cut_s = t.onset_s;
        break;
      }
    }
    const auto rows = std::min(n_scans, static_cast<Index>(std::ceil(cut_s / config.tr_s)));
    DesignMatrix prefix = result.design;
    prefix.values = result.design.values.topRows(rows);
    prefix = drop_empty_columns(prefix);
    result.model = fit_weights(prefix, subject.bold.rows(0, rows), config.ridge);
  }

  BoldPatterns patterns = config.test_pattern_mode == TestPatternMode::glm_beta
                              ? condition_patterns(full_fit, "test:")
                              : peak_aligned_patterns(subject.bold, subject.trials, config.tr_s, Condition::test_face,
                                                      config.microtime_bins);
  result.decoded = decode_latents(result.model, patterns);

  RecognitionOptions recognition;
  recognition.with_p_values = options.with_p_values;
  recognition.n_draws = options.n_draws;
  recognition.seed = options.stats_seed;
  const LatentTable estimates = result.decoded.latents.select(truth.test_latents.ids());
  result.recognition = recognition_report(estimates, truth.test_latents, recognition);

  const double w_norm = truth.w_star.norm();
  result.w_relative_error =
      w_norm > 0.0 ? (result.model.weights() - truth.w_star).norm() / w_norm : std::numeric_limits<double>::quiet_NaN();

  // Gender axis estimated from labelled training codes, as with a labelled face corpus.
  std::vector<std::string> male_ids, female_ids;
  for (std::size_t i = 0; i < truth.train_male.size(); ++i) {
    (truth.train_male[i] ? male_ids : female_ids).push_back(truth.train_latents.ids()[i]);
  }
  if (!male_ids.empty() && !female_ids.empty()) {
    const auto attr =
        attribute_vector(truth.train_latents.select(male_ids), truth.train_latents.select(female_ids), "male");
    if (!attr.vector.isZero(0.0)) {
      result.gender_accuracy = score_classification(classify_attribute(estimates, attr), truth.test_male).accuracy;
      result.gender_ceiling =
          score_classification(classify_attribute(truth.test_latents, attr), truth.test_male).accuracy;
    }
  }
  return result;
}

namespace {

template <typename Fn>
void parallel_replicates(int n, Fn&& fn) {
  const unsigned threads = std::max(1u, std::min<unsigned>(std::thread::hardware_concurrency(), static_cast<unsigned>(n)));
  if (threads <= 1) {
    for (int r = 0; r < n; ++r) fn(r);
    return;
  }
  std::vector<std::jthread> pool;
  for (unsigned t = 0; t < threads; ++t) {
    pool.emplace_back([&, t] {
      for (int r = static_cast<int>(t); r < n; r += static_cast<int>(threads)) fn(r);
    });
  }
}

}  // namespace

std::vector<StudyRow> run_training_size_study(const SimConfig& config, const std::vector<double>& fractions,
                                              int n_replicates) {
  if (fractions.empty()) throw Error("training-size study: no fractions");
  for (std::size_t i = 0; i < fractions.size(); ++i) {
    if (!(fractions[i] > 0.0 && fractions[i] <= 1.0)) throw Error("training-size study: fractions must lie in (0, 1]");
    if (i > 0 && !(fractions[i] > fractions[i - 1])) throw Error("training-size study: fractions must ascend");
  }
  if (n_replicates < 1) throw Error("training-size study: need at least one replicate");
  std::vector<std::vector<PipelineResult>> results(static_cast<std::size_t>(n_replicates));
  parallel_replicates(n_replicates, [&](int r) {
    SimConfig c = config;
    c.seed = n_replicates == 1 ? config.seed : stats::derive_seed(config.seed, static_cast<std::uint64_t>(r));
    const auto subject = simulate_subject(c);
    for (double f : fractions) {
      PipelineOptions o;
      o.training_fraction = f;
      results[static_cast<std::size_t>(r)].push_back(run_pipeline(subject, c, o));
    }
  });
  std::vector<StudyRow> rows;
  for (std::size_t i = 0; i < fractions.size(); ++i) {
    StudyRow row;
    row.parameter = fractions[i];
    row.replicates = n_replicates;
    for (const auto& rep : results) {
      row.pairwise += rep[i].recognition.pairwise_accuracy / n_replicates;
      row.full += rep[i].recognition.full_accuracy / n_replicates;
      row.gender += rep[i].gender_accuracy / n_replicates;
      row.gender_ceiling += rep[i].gender_ceiling / n_replicates;
    }
    row.n_training_trials = results.front()[i].n_training_trials;
    rows.push_back(row);
  }
  return rows;
}

std::vector<StudyRow> run_snr_sweep(const SimConfig& config, const std::vector<double>& sigmas, int n_replicates) {
  if (sigmas.empty()) throw Error("snr sweep: no noise levels");
  for (std::size_t i = 0; i < sigmas.size(); ++i) {
    if (!(sigmas[i] >= 0.0) || !std::isfinite(sigmas[i])) throw Error("snr sweep: sigmas must be nonnegative");
    if (i > 0 && sigmas[i] < sigmas[i - 1]) throw Error("snr sweep: sigmas must ascend");
  }
  if (n_replicates < 1) throw Error("snr sweep: need at least one replicate");
  std::vector<std::vector<PipelineResult>> results(static_cast<std::size_t>(n_replicates));
  parallel_replicates(n_replicates, [&](int r) {
    for (double sigma : sigmas) {
      SimConfig c = config;
      c.seed = n_replicates == 1 ? config.seed : stats::derive_seed(config.seed, static_cast<std::uint64_t>(r));
      c.noise_sigma = sigma;
      results[static_cast<std::size_t>(r)].push_back(run_pipeline(simulate_subject(c), c));
    }
  });
  std::vector<StudyRow> rows;
  for (std::size_t i = 0; i < sigmas.size(); ++i) {
    StudyRow row;
    row.parameter = sigmas[i];
    row.replicates = n_replicates;
    for (const auto& rep : results) {
      row.pairwise += rep[i].recognition.pairwise_accuracy / n_replicates;
      row.full += rep[i].recognition.full_accuracy / n_replicates;
      row.gender += rep[i].gender_accuracy / n_replicates;
      row.gender_ceiling += rep[i].gender_ceiling / n_replicates;
    }
    row.n_training_trials = results.front()[i].n_training_trials;
    rows.push_back(row);
  }
  return rows;
}

}  // namespace ldec
