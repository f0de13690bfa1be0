#include "ldec/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <sstream>

#include "ldec/config.hpp"
#include "ldec/design_matrix.hpp"
#include "ldec/error.hpp"
#include "ldec/evaluation.hpp"
#include "ldec/io.hpp"
#include "ldec/latent_codec.hpp"
#include "ldec/linear_decoder.hpp"
#include "ldec/simd/kernels.hpp"
#include "ldec/simulator.hpp"
#include "ldec/voxel_select.hpp"

namespace fs = std::filesystem;

namespace ldec {
namespace {

std::string num(double v) { return io::format_number(v); }

// Matrices may be LDMX or comma-separated text.
Matrix load_any_matrix(const fs::path& path) {
  if (path.extension() == ".csv" || path.extension() == ".txt") return io::read_csv_matrix(path);
  return io::read_matrix(path);
}

std::vector<std::string> regressor_ids(int n_latent) {
  std::vector<std::string> names{"bias"};
  for (int d = 0; d < n_latent; ++d) names.push_back("latent_" + std::to_string(d));
  return names;
}

struct Common {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir = ".";

  RunConfig config() const {
    RunConfig c = config_path.empty() ? RunConfig{} : read_config(config_path);
    if (seed) c.override_seed(*seed);
    c.validate();
    return c;
  }

  fs::path out(const std::string& name) const {
    fs::create_directories(out_dir);
    return fs::path(out_dir) / name;
  }
};

void add_common(CLI::App* cmd, Common& common) {
  cmd->add_option("--config", common.config_path, "Run configuration file")->check(CLI::ExistingFile);
  cmd->add_option("--seed", common.seed, "Seed for statistics and simulation (overrides the config)");
  cmd->add_option("--out", common.out_dir, "Output directory");
}

void write_study(const fs::path& path, std::string_view parameter, const std::vector<StudyRow>& rows) {
  io::TsvTable t;
  t.header = {std::string(parameter), "n_training_trials", "pairwise", "full", "gender", "gender_ceiling", "replicates"};
  for (const auto& r : rows) {
    t.rows.push_back({num(r.parameter), std::to_string(r.n_training_trials), num(r.pairwise), num(r.full),
                      num(r.gender), num(r.gender_ceiling), std::to_string(r.replicates)});
  }
  io::write_tsv(path, t);
}

std::string p_text(const stats::TestResult& r) {
  std::string s = num(r.p_value);
  if (r.method == stats::Method::monte_carlo) s += " (monte_carlo, " + std::to_string(r.n_draws) + " draws)";
  else s += " (" + std::string(stats::to_string(r.method)) + ")";
  return s;
}

std::vector<double> parse_list(const std::string& text, std::string_view what) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    if (auto slash = item.find('/'); slash != std::string::npos) {
      out.push_back(io::parse_number(item.substr(0, slash), what) / io::parse_number(item.substr(slash + 1), what));
    } else {
      out.push_back(io::parse_number(item, what));
    }
  }
  if (out.empty()) throw Error(std::string(what) + ": empty list");
  return out;
}

// voxel_id -> true/false gender label table.
std::map<std::string, bool> read_labels(const fs::path& path, const std::string& column) {
  const auto t = io::read_tsv(path);
  const auto id_col = t.column("stim_id");
  const auto val_col = t.column(column);
  std::map<std::string, bool> labels;
  for (const auto& row : t.rows) {
    const auto& v = row[val_col];
    if (v != "0" && v != "1") throw Error(path.string() + ": " + column + " must be 0 or 1, got '" + v + "'");
    labels[row[id_col]] = v == "1";
  }
  return labels;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Linear decoding of latent stimulus codes from voxel patterns", "ldec"};
  app.require_subcommand(1);
  std::string simd_level;
  app.add_option("--simd", simd_level, "Force a kernel set: scalar, avx2 or neon");

  Common common;
  std::function<void()> action;

  // simulate
  auto* simulate = app.add_subcommand("simulate", "Generate a synthetic subject with known weights");
  add_common(simulate, common);
  simulate->callback([&] {
    action = [&] {
      const auto cfg = common.config();
      const auto sim = simulate_subject(cfg.sim);
      write_trials(common.out("trials.tsv"), sim.trials);
      save_bold(common.out("bold.ldmx"), sim.bold);
      save_model(common.out("truth_w.ldmx"),
                 EncodingModel(sim.truth.w_star, regressor_ids(cfg.sim.n_latent_dims), sim.bold.voxel_ids));
      save_latent_table(common.out("latents_train.ldmx"), sim.truth.train_latents);
      save_latent_table(common.out("latents_test.ldmx"), sim.truth.test_latents);
      write_voxels(common.out("voxels.tsv"), sim.truth.voxels);
      io::TsvTable g;
      g.header = {"stim_id", "set", "male"};
      for (std::size_t i = 0; i < sim.truth.train_male.size(); ++i) {
        g.rows.push_back({sim.truth.train_latents.ids()[i], "train", sim.truth.train_male[i] ? "1" : "0"});
      }
      for (std::size_t i = 0; i < sim.truth.test_male.size(); ++i) {
        g.rows.push_back({sim.truth.test_latents.ids()[i], "test", sim.truth.test_male[i] ? "1" : "0"});
      }
      io::write_tsv(common.out("gender.tsv"), g);
      io::write_file_atomic(common.out("config.used.toml"), format_config(cfg));
      out << "simulated " << sim.bold.values.rows() << " scans x " << sim.bold.values.cols() << " voxels, "
          << sim.trials.size() << " trials\n";
    };
  });

  // pca-fit
  std::string images_path;
  Index n_components = 0;
  auto* pca_fit_cmd = app.add_subcommand("pca-fit", "Fit a PCA codec to image rows");
  add_common(pca_fit_cmd, common);
  pca_fit_cmd->add_option("--images", images_path, "Images, one per row (.ldmx or .csv)")->required();
  pca_fit_cmd->add_option("--components", n_components, "Number of components")->required();
  pca_fit_cmd->callback([&] {
    action = [&] {
      const auto codec = pca_fit(load_any_matrix(images_path), n_components);
      fs::create_directories(common.out_dir);
      save_pca_codec(common.out_dir, codec);
      const Vector frac = codec.explained_fraction();
      out << "components " << codec.n_components() << ", explained fraction " << num(frac.sum()) << "\n";
    };
  });

  // encode
  std::string codec_dir, ids_path;
  auto* encode = app.add_subcommand("encode", "Project images onto a PCA codec");
  add_common(encode, common);
  encode->add_option("--codec", codec_dir, "Codec directory from pca-fit")->required();
  encode->add_option("--images", images_path, "Images, one per row (.ldmx or .csv)")->required();
  encode->add_option("--ids", ids_path, "Stimulus ids, one per line");
  encode->callback([&] {
    action = [&] {
      const auto codec = load_pca_codec(codec_dir);
      std::vector<std::string> ids;
      if (!ids_path.empty()) ids = io::read_ids(ids_path);
      const auto table = pca_encode(codec, load_any_matrix(images_path), ids);
      save_latent_table(common.out("latents.ldmx"), table);
      out << "encoded " << table.size() << " images\n";
    };
  });

  // pca-decode
  std::string latents_path;
  auto* pca_decode_cmd = app.add_subcommand("pca-decode", "Reconstruct images from PCA codes");
  add_common(pca_decode_cmd, common);
  pca_decode_cmd->add_option("--codec", codec_dir, "Codec directory from pca-fit")->required();
  pca_decode_cmd->add_option("--latents", latents_path, "Latent table (.ldmx with .ids sidecar)")->required();
  pca_decode_cmd->callback([&] {
    action = [&] {
      const auto codec = load_pca_codec(codec_dir);
      const auto table = load_latent_table(latents_path);
      const Matrix images = pca_decode(codec, table);
      io::write_matrix(common.out("images.ldmx"), images);
      io::write_ids(io::row_ids_path(common.out("images.ldmx")), table.ids());
      out << "decoded " << images.rows() << " images\n";
    };
  });

  // fit
  std::string trials_path, bold_path;
  auto* fit = app.add_subcommand("fit", "Fit the encoding model and per-stimulus test patterns");
  add_common(fit, common);
  fit->add_option("--trials", trials_path, "Trial table (.tsv)")->required();
  fit->add_option("--bold", bold_path, "Scan x voxel time series (.ldmx with sidecars)")->required();
  fit->add_option("--latents", latents_path, "Training latent table")->required();
  fit->callback([&] {
    action = [&] {
      const auto cfg = common.config();
      const auto trials = read_trials(trials_path);
      const auto bold = load_bold(bold_path);
      const auto latents = load_latent_table(latents_path);
      DesignOptions opts;
      opts.microtime_bins = cfg.design.microtime_bins;
      const auto design = build_design(trials, latents, bold.values.rows(), cfg.design.tr_s, true, opts);
      const auto glm = fit_glm(design, bold, cfg.fit.ridge);
      save_model(common.out("model.ldmx"), encoding_model(glm));
      auto has_prefix = [&](std::string_view prefix) {
        return std::any_of(glm.regressor_names.begin(), glm.regressor_names.end(),
                           [&](const std::string& n) { return n.starts_with(prefix); });
      };
      if (has_prefix("test:")) save_bold(common.out("test_patterns.ldmx"), condition_patterns(glm, "test:"));
      if (has_prefix("imagery:")) save_bold(common.out("imagery_patterns.ldmx"), condition_patterns(glm, "imagery:"));

      // Selection scores: face-vs-fixation t and adjusted R^2 gain from the latent regressors.
      const auto baseline_design = build_design(trials, latents, bold.values.rows(), cfg.design.tr_s, false, opts);
      const auto baseline = fit_glm(baseline_design, bold, cfg.fit.ridge);
      Vector contrast = Vector::Zero(glm.n_regressors());
      contrast(glm.row("bias")) = 1.0;
      const Vector t = contrast_t(glm, contrast);
      VoxelSet set;
      for (const auto& id : bold.voxel_ids) set.voxels.push_back(Voxel{id});
      set = score_voxels(std::move(set), {baseline.r_squared(), baseline.n_observations, baseline.n_predictors()},
                         {glm.r_squared(), glm.n_observations, glm.n_predictors()}, t);
      io::TsvTable scores;
      scores.header = {"voxel_id", "t_face", "var_gain_pct"};
      for (const auto& v : set.voxels) scores.rows.push_back({v.id, num(v.t_face), num(v.var_gain_pct)});
      io::write_tsv(common.out("voxel_scores.tsv"), scores);
      out << "fit " << glm.n_regressors() << " regressors on " << glm.n_observations << " scans, "
          << bold.values.cols() << " voxels\n";
    };
  });

  // decode
  std::string model_path, patterns_path, voxels_path;
  auto* decode = app.add_subcommand("decode", "Invert the encoding model on activity patterns");
  add_common(decode, common);
  decode->add_option("--model", model_path, "Encoding model (.ldmx with sidecars)")->required();
  decode->add_option("--patterns", patterns_path, "Pattern x voxel matrix (.ldmx with sidecars)")->required();
  decode->add_option("--voxels", voxels_path, "Restrict to the voxels listed in this table");
  decode->callback([&] {
    action = [&] {
      auto model = load_model(model_path);
      if (!voxels_path.empty()) model = model.restrict_voxels(read_voxels(voxels_path).ids());
      const auto decoded = decode_latents(model, load_bold(patterns_path));
      save_latent_table(common.out("decoded.ldmx"), decoded.latents);
      out << "decoded " << decoded.latents.size() << " patterns with " << model.n_voxels() << " voxels\n";
    };
  });

  // select-voxels
  std::string scores_path;
  auto* select = app.add_subcommand("select-voxels", "Keep face-responsive, well-fit voxels");
  add_common(select, common);
  select->add_option("--voxels", voxels_path, "Voxel table (.tsv)")->required();
  select->add_option("--scores", scores_path, "voxel_scores.tsv from fit (overrides t_face and var_gain_pct)");
  select->callback([&] {
    action = [&] {
      const auto cfg = common.config();
      auto set = read_voxels(voxels_path);
      if (!scores_path.empty()) {
        const auto t = io::read_tsv(scores_path);
        const auto id = t.column("voxel_id");
        const auto tf = t.column("t_face");
        const auto gain = t.column("var_gain_pct");
        std::map<std::string, std::pair<double, double>> by_id;
        for (const auto& r : t.rows) {
          by_id[r[id]] = {io::parse_number(r[tf], "t_face"), io::parse_number(r[gain], "var_gain_pct")};
        }
        for (auto& v : set.voxels) {
          const auto it = by_id.find(v.id);
          if (it == by_id.end()) throw Error("no score for voxel " + v.id);
          std::tie(v.t_face, v.var_gain_pct) = it->second;
        }
      }
      const auto kept = select_voxels(set, cfg.select.t_threshold, cfg.select.gain_threshold_pct);
      write_voxels(common.out("selected_voxels.tsv"), kept);
      out << "selected " << kept.size() << " of " << set.size() << " voxels\n";
    };
  });

  // segment
  auto* segment = app.add_subcommand("segment", "Split voxels into occipital, temporal and frontoparietal thirds");
  add_common(segment, common);
  segment->add_option("--voxels", voxels_path, "Voxel table (.tsv)")->required();
  segment->callback([&] {
    action = [&] {
      const auto cfg = common.config();
      const auto set = segment_regions(read_voxels(voxels_path), cfg.select.segment_axis);
      write_voxels(common.out("regions.tsv"), set);
      out << "occipital " << set.ids_in(Region::occipital).size() << ", temporal "
          << set.ids_in(Region::temporal).size() << ", frontoparietal " << set.ids_in(Region::frontoparietal).size()
          << "\n";
    };
  });

  // evaluate
  std::string decoded_path, truth_path;
  auto* evaluate = app.add_subcommand("evaluate", "Pairwise and full recognition of decoded codes");
  add_common(evaluate, common);
  evaluate->add_option("--decoded", decoded_path, "Decoded latent table")->required();
  evaluate->add_option("--truth", truth_path, "True latent table of the same stimuli")->required();
  evaluate->callback([&] {
    action = [&] {
      const auto cfg = common.config();
      const auto truth = load_latent_table(truth_path);
      const auto decoded = load_latent_table(decoded_path);
      RecognitionOptions opts;
      opts.n_draws = cfg.stats.n_draws;
      opts.seed = cfg.stats.seed;
      const auto rep = recognition_report(decoded, truth, opts);
      io::TsvTable t;
      t.header = {"stim_id", "rank", "pairwise", "full"};
      for (std::size_t i = 0; i < rep.ids.size(); ++i) {
        t.rows.push_back({rep.ids[i], num(rep.ranks[i]),
                          num(stats::pairwise_accuracy_from_rank(rep.ranks[i], rep.n_candidates)),
                          rep.ranks[i] == 1.0 ? "1" : "0"});
      }
      io::write_tsv(common.out("recognition.tsv"), t);
      std::ostringstream r;
      r << "items\t" << rep.ids.size() << "\n"
        << "candidates\t" << rep.n_candidates << "\n"
        << "pairwise\t" << num(rep.pairwise_accuracy) << "\n"
        << "pairwise_p\t" << p_text(rep.p_pairwise) << "\n"
        << "full\t" << num(rep.full_accuracy) << "\n"
        << "full_successes\t" << rep.full_successes << "\n"
        << "full_p\t" << p_text(rep.p_full) << "\n";
      io::write_file_atomic(common.out("report.txt"), r.str());
      out << r.str();
    };
  });

  // gender
  std::string train_path, labels_path;
  auto* gender = app.add_subcommand("gender", "Classify decoded codes along a labelled attribute axis");
  add_common(gender, common);
  gender->add_option("--decoded", decoded_path, "Decoded latent table")->required();
  gender->add_option("--train", train_path, "Labelled latent table used to build the axis")->required();
  gender->add_option("--labels", labels_path, "TSV with stim_id and a 0/1 label column")->required();
  std::string label_column = "male";
  gender->add_option("--column", label_column, "Label column name");
  gender->callback([&] {
    action = [&] {
      const auto labels = read_labels(labels_path, label_column);
      const auto train = load_latent_table(train_path);
      std::vector<std::string> with, without;
      for (const auto& id : train.ids()) {
        const auto it = labels.find(id);
        if (it == labels.end()) throw Error("no label for training stimulus " + id);
        (it->second ? with : without).push_back(id);
      }
      const auto attr = attribute_vector(train.select(with), train.select(without), label_column);
      const auto decoded = load_latent_table(decoded_path);
      std::vector<bool> truth;
      for (const auto& id : decoded.ids()) {
        const auto it = labels.find(id);
        if (it == labels.end()) throw Error("no label for decoded stimulus " + id);
        truth.push_back(it->second);
      }
      const auto pred = classify_attribute(decoded, attr);
      const auto score = score_classification(pred, truth);
      io::TsvTable t;
      t.header = {"stim_id", "predicted", "label"};
      for (std::size_t i = 0; i < pred.size(); ++i) {
        t.rows.push_back({decoded.ids()[i], std::string(to_string(pred[i])), truth[i] ? "1" : "0"});
      }
      io::write_tsv(common.out("attribute_predictions.tsv"), t);
      std::ostringstream r;
      r << "attribute\t" << label_column << "\n"
        << "correct\t" << score.correct << "\n"
        << "total\t" << score.total << "\n"
        << "accuracy\t" << num(score.accuracy) << "\n"
        << "p\t" << p_text(score.p_value) << "\n";
      io::write_file_atomic(common.out("attribute_report.txt"), r.str());
      out << r.str();
    };
  });

  // varpart
  std::string occ_path, temp_path, fp_path;
  auto* varpart = app.add_subcommand("varpart", "Unique and shared variance of three regional decodings");
  add_common(varpart, common);
  varpart->add_option("--truth", truth_path, "True latent table")->required();
  varpart->add_option("--occ", occ_path, "Codes decoded from occipital voxels")->required();
  varpart->add_option("--temp", temp_path, "Codes decoded from temporal voxels")->required();
  varpart->add_option("--fp", fp_path, "Codes decoded from frontoparietal voxels")->required();
  varpart->callback([&] {
    action = [&] {
      const auto vp = variance_partition(load_latent_table(truth_path), load_latent_table(occ_path),
                                         load_latent_table(temp_path), load_latent_table(fp_path));
      io::TsvTable t;
      t.header = {"cell", "r2"};
      t.rows = {{"unique_occ", num(vp.unique_occ)},         {"unique_temp", num(vp.unique_temp)},
                {"unique_fp", num(vp.unique_fp)},           {"shared_occ_temp", num(vp.shared_occ_temp)},
                {"shared_occ_fp", num(vp.shared_occ_fp)},   {"shared_temp_fp", num(vp.shared_temp_fp)},
                {"shared_all", num(vp.shared_all)},         {"full", num(vp.r2_full)}};
      io::write_tsv(common.out("varpart.tsv"), t);
      out << io::format_tsv(t);
      if (vp.used_pseudo_inverse) out << "note: collinear predictions, pseudo-inverse used\n";
    };
  });

  // ssim
  std::string image_a, image_b;
  double dynamic_range = 1.0;
  auto* ssim_cmd = app.add_subcommand("ssim", "Structural similarity of two images");
  add_common(ssim_cmd, common);
  ssim_cmd->add_option("--a", image_a, "First image matrix (.ldmx or .csv)")->required();
  ssim_cmd->add_option("--b", image_b, "Second image matrix (.ldmx or .csv)")->required();
  ssim_cmd->add_option("--range", dynamic_range, "Dynamic range of pixel values");
  ssim_cmd->callback([&] {
    action = [&] {
      SsimOptions o;
      o.dynamic_range = dynamic_range;
      const double v = ssim(load_any_matrix(image_a), load_any_matrix(image_b), o);
      io::write_file_atomic(common.out("ssim.txt"), "ssim\t" + num(v) + "\n");
      out << "ssim\t" << num(v) << "\n";
    };
  });

  // study-size
  std::string fractions_text = "1/8,1/4,1/2,1";
  int replicates = 1;
  auto* study = app.add_subcommand("study-size", "Accuracy versus amount of training data on simulated subjects");
  add_common(study, common);
  study->add_option("--fractions", fractions_text, "Comma-separated training fractions");
  study->add_option("--replicates", replicates, "Simulated subjects per fraction")->check(CLI::PositiveNumber);
  study->callback([&] {
    action = [&] {
      const auto cfg = common.config();
      const auto rows = run_training_size_study(cfg.sim, parse_list(fractions_text, "--fractions"), replicates);
      write_study(common.out("study_size.tsv"), "fraction", rows);
      out << io::format_tsv(io::read_tsv(common.out("study_size.tsv")));
    };
  });

  // snr-sweep
  std::string sigmas_text = "0,0.5,1,2,4";
  auto* sweep = app.add_subcommand("snr-sweep", "Accuracy versus noise level on simulated subjects");
  add_common(sweep, common);
  sweep->add_option("--sigmas", sigmas_text, "Comma-separated noise levels");
  sweep->add_option("--replicates", replicates, "Simulated subjects per level")->check(CLI::PositiveNumber);
  sweep->callback([&] {
    action = [&] {
      const auto cfg = common.config();
      const auto rows = run_snr_sweep(cfg.sim, parse_list(sigmas_text, "--sigmas"), replicates);
      write_study(common.out("snr_sweep.tsv"), "sigma", rows);
      out << io::format_tsv(io::read_tsv(common.out("snr_sweep.tsv")));
    };
  });

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << "\n" << app.help();
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }

  try {
    if (!simd_level.empty()) {
      if (simd_level == "scalar") simd::set_level(simd::Level::scalar);
      else if (simd_level == "avx2") simd::set_level(simd::Level::avx2);
      else if (simd_level == "neon") simd::set_level(simd::Level::neon);
      else throw Error("--simd must be scalar, avx2 or neon");
    }
    if (action) action();
  } catch (const std::exception& e) {
    std::string msg = e.what();
    std::replace(msg.begin(), msg.end(), '\n', ' ');
    err << "error: " << msg << "\n";
    return 1;
  }
  return 0;
}

}  // namespace ldec
