#include "ldec/config.hpp"

#include <array>
#include <charconv>
#include <functional>
#include <map>
#include <sstream>

#include "ldec/error.hpp"
#include "ldec/io.hpp"

namespace ldec {

void RunConfig::override_seed(std::uint64_t seed) {
  stats.seed = seed;
  sim.seed = seed;
}

void RunConfig::validate() const {
  if (!(design.tr_s > 0.0)) throw Error("config: design.tr_s must be positive");
  if (design.microtime_bins < 1) throw Error("config: design.microtime_bins must be positive");
  if (!(fit.ridge >= 0.0)) throw Error("config: fit.ridge must be nonnegative");
  if (!(select.t_threshold > 0.0) || !(select.gain_threshold_pct > 0.0)) {
    throw Error("config: selection thresholds must be positive");
  }
  if (stats.n_draws < 1) throw Error("config: stats.n_draws must be positive");
  sim.validate();
}

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

// Strips a trailing comment that is not inside quotes.
std::string_view strip_comment(std::string_view s) {
  bool quoted = false;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '"') quoted = !quoted;
    if (s[i] == '#' && !quoted) return s.substr(0, i);
  }
  return s;
}

struct Value {
  std::string text;
  int line = 0;
  std::string key;

  [[noreturn]] void fail(const std::string& what) const {
    throw Error("config line " + std::to_string(line) + ": " + key + ": " + what);
  }

  double as_double() const {
    try {
      return io::parse_number(text, key);
    } catch (const Error&) {
      fail("expected a number, got '" + text + "'");
    }
  }

  template <typename T>
  T as_integer() const {
    T out{};
    const auto* end = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(text.data(), end, out);
    if (ec != std::errc() || ptr != end) fail("expected an integer, got '" + text + "'");
    return out;
  }

  int as_int() const { return as_integer<int>(); }
  std::uint64_t as_u64() const { return as_integer<std::uint64_t>(); }

  std::string as_string() const {
    if (text.size() >= 2 && text.front() == '"' && text.back() == '"') return text.substr(1, text.size() - 2);
    if (text.find('"') != std::string::npos) fail("unbalanced quotes");
    return text;
  }

  std::array<double, 3> as_triple() const {
    if (text.size() < 2 || text.front() != '[' || text.back() != ']') fail("expected [a, b, c]");
    std::array<double, 3> out{};
    std::stringstream ss(text.substr(1, text.size() - 2));
    std::string item;
    std::size_t n = 0;
    while (std::getline(ss, item, ',')) {
      if (n == 3) fail("expected exactly three values");
      Value v{std::string(trim(item)), line, key};
      out[n++] = v.as_double();
    }
    if (n != 3) fail("expected exactly three values");
    return out;
  }
};

using Setter = std::function<void(RunConfig&, const Value&)>;

const std::map<std::string, Setter, std::less<>>& setters() {
  static const std::map<std::string, Setter, std::less<>> table = {
      {"design.tr_s", [](RunConfig& c, const Value& v) { c.design.tr_s = v.as_double(); }},
      {"design.microtime_bins", [](RunConfig& c, const Value& v) { c.design.microtime_bins = v.as_int(); }},
      {"fit.ridge", [](RunConfig& c, const Value& v) { c.fit.ridge = v.as_double(); }},
      {"select.t_threshold", [](RunConfig& c, const Value& v) { c.select.t_threshold = v.as_double(); }},
      {"select.gain_threshold_pct", [](RunConfig& c, const Value& v) { c.select.gain_threshold_pct = v.as_double(); }},
      {"select.segment_axis",
       [](RunConfig& c, const Value& v) {
         try {
           c.select.segment_axis = parse_segment_axis(v.as_string());
         } catch (const Error& e) {
           v.fail(e.what());
         }
       }},
      {"stats.n_draws", [](RunConfig& c, const Value& v) { c.stats.n_draws = v.as_u64(); }},
      {"stats.seed", [](RunConfig& c, const Value& v) { c.stats.seed = v.as_u64(); }},
      {"sim.n_train_stimuli", [](RunConfig& c, const Value& v) { c.sim.n_train_stimuli = v.as_int(); }},
      {"sim.n_test_stimuli", [](RunConfig& c, const Value& v) { c.sim.n_test_stimuli = v.as_int(); }},
      {"sim.n_latent_dims", [](RunConfig& c, const Value& v) { c.sim.n_latent_dims = v.as_int(); }},
      {"sim.n_voxels", [](RunConfig& c, const Value& v) { c.sim.n_voxels = v.as_int(); }},
      {"sim.tr_s", [](RunConfig& c, const Value& v) { c.sim.tr_s = v.as_double(); }},
      {"sim.stim_duration_s", [](RunConfig& c, const Value& v) { c.sim.stim_duration_s = v.as_double(); }},
      {"sim.isi_s", [](RunConfig& c, const Value& v) { c.sim.isi_s = v.as_double(); }},
      {"sim.noise_sigma", [](RunConfig& c, const Value& v) { c.sim.noise_sigma = v.as_double(); }},
      {"sim.test_repeats", [](RunConfig& c, const Value& v) { c.sim.test_repeats = v.as_int(); }},
      {"sim.gender_separation", [](RunConfig& c, const Value& v) { c.sim.gender_separation = v.as_double(); }},
      {"sim.seed", [](RunConfig& c, const Value& v) { c.sim.seed = v.as_u64(); }},
      {"sim.signal_scale", [](RunConfig& c, const Value& v) { c.sim.signal_scale = v.as_double(); }},
      {"sim.fixation_ratio", [](RunConfig& c, const Value& v) { c.sim.fixation_ratio = v.as_double(); }},
      {"sim.one_back_ratio", [](RunConfig& c, const Value& v) { c.sim.one_back_ratio = v.as_double(); }},
      {"sim.lead_in_s", [](RunConfig& c, const Value& v) { c.sim.lead_in_s = v.as_double(); }},
      {"sim.tail_s", [](RunConfig& c, const Value& v) { c.sim.tail_s = v.as_double(); }},
      {"sim.baseline", [](RunConfig& c, const Value& v) { c.sim.baseline = v.as_double(); }},
      {"sim.region_gain", [](RunConfig& c, const Value& v) { c.sim.region_gain = v.as_triple(); }},
      {"sim.microtime_bins", [](RunConfig& c, const Value& v) { c.sim.microtime_bins = v.as_int(); }},
      {"sim.ridge", [](RunConfig& c, const Value& v) { c.sim.ridge = v.as_double(); }},
      {"sim.test_pattern_mode",
       [](RunConfig& c, const Value& v) {
         try {
           c.sim.test_pattern_mode = parse_test_pattern_mode(v.as_string());
         } catch (const Error& e) {
           v.fail(e.what());
         }
       }},
  };
  return table;
}

}  // namespace

RunConfig parse_config(std::string_view text) {
  RunConfig config;
  std::string section;
  int line_no = 0;
  std::map<std::string, int> seen;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    const auto line = trim(strip_comment(text.substr(pos, nl - pos)));
    pos = nl + 1;
    ++line_no;
    if (line.empty()) continue;
    const auto where = "config line " + std::to_string(line_no) + ": ";
    if (line.front() == '[') {
      if (line.back() != ']') throw Error(where + "malformed section header");
      section = std::string(trim(line.substr(1, line.size() - 2)));
      if (section != "design" && section != "fit" && section != "select" && section != "stats" && section != "sim") {
        throw Error(where + "unknown section [" + section + "]");
      }
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw Error(where + "expected key = value");
    if (section.empty()) throw Error(where + "key outside a section");
    const std::string key = section + "." + std::string(trim(line.substr(0, eq)));
    const auto it = setters().find(key);
    if (it == setters().end()) throw Error(where + "unknown key " + key);
    if (auto [prev, fresh] = seen.emplace(key, line_no); !fresh) {
      throw Error(where + "duplicate key " + key + " (first set on line " + std::to_string(prev->second) + ")");
    }
    it->second(config, Value{std::string(trim(line.substr(eq + 1))), line_no, key});
  }
  config.validate();
  return config;
}

RunConfig read_config(const std::filesystem::path& path) {
  return parse_config(io::read_file(path));
}

std::string format_config(const RunConfig& c) {
  std::ostringstream out;
  // shortest text that reads back to the same double
  auto num = [](double v) {
    std::array<char, 32> buf{};
    const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    return std::string(buf.data(), res.ptr);
  };
  out << "[design]\n"
      << "tr_s = " << num(c.design.tr_s) << "\n"
      << "microtime_bins = " << c.design.microtime_bins << "\n\n"
      << "[fit]\n"
      << "ridge = " << num(c.fit.ridge) << "\n\n"
      << "[select]\n"
      << "t_threshold = " << num(c.select.t_threshold) << "\n"
      << "gain_threshold_pct = " << num(c.select.gain_threshold_pct) << "\n"
      << "segment_axis = \"" << to_string(c.select.segment_axis) << "\"\n\n"
      << "[stats]\n"
      << "n_draws = " << c.stats.n_draws << "\n"
      << "seed = " << c.stats.seed << "\n\n";
  const auto& s = c.sim;
  out << "[sim]\n"
      << "n_train_stimuli = " << s.n_train_stimuli << "\n"
      << "n_test_stimuli = " << s.n_test_stimuli << "\n"
      << "n_latent_dims = " << s.n_latent_dims << "\n"
      << "n_voxels = " << s.n_voxels << "\n"
      << "tr_s = " << num(s.tr_s) << "\n"
      << "stim_duration_s = " << num(s.stim_duration_s) << "\n"
      << "isi_s = " << num(s.isi_s) << "\n"
      << "noise_sigma = " << num(s.noise_sigma) << "\n"
      << "test_repeats = " << s.test_repeats << "\n"
      << "gender_separation = " << num(s.gender_separation) << "\n"
      << "seed = " << s.seed << "\n"
      << "signal_scale = " << num(s.signal_scale) << "\n"
      << "fixation_ratio = " << num(s.fixation_ratio) << "\n"
      << "one_back_ratio = " << num(s.one_back_ratio) << "\n"
      << "lead_in_s = " << num(s.lead_in_s) << "\n"
      << "tail_s = " << num(s.tail_s) << "\n"
      << "baseline = " << num(s.baseline) << "\n"
      << "region_gain = [" << num(s.region_gain[0]) << ", " << num(s.region_gain[1]) << ", "
      << num(s.region_gain[2]) << "]\n"
      << "microtime_bins = " << s.microtime_bins << "\n"
      << "ridge = " << num(s.ridge) << "\n"
      << "test_pattern_mode = \"" << to_string(s.test_pattern_mode) << "\"\n";
  return out.str();
}

}  // namespace ldec
