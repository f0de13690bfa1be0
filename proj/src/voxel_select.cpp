#include "ldec/voxel_select.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "ldec/error.hpp"
#include "ldec/io.hpp"

namespace ldec {

std::string_view to_string(Region r) {
  switch (r) {
    case Region::occipital: return "occipital";
    case Region::temporal: return "temporal";
    case Region::frontoparietal: return "frontoparietal";
    case Region::unassigned: return "unassigned";
  }
  return "unassigned";
}

Region parse_region(std::string_view text) {
  for (auto r : {Region::occipital, Region::temporal, Region::frontoparietal, Region::unassigned}) {
    if (text == to_string(r)) return r;
  }
  throw Error("unknown region '" + std::string(text) + "'");
}

std::vector<std::string> VoxelSet::ids() const {
  std::vector<std::string> out;
  out.reserve(voxels.size());
  for (const auto& v : voxels) out.push_back(v.id);
  return out;
}

std::vector<std::string> VoxelSet::ids_in(Region region) const {
  std::vector<std::string> out;
  for (const auto& v : voxels) {
    if (v.region == region) out.push_back(v.id);
  }
  return out;
}

void VoxelSet::validate() const {
  std::unordered_set<std::string> seen;
  for (const auto& v : voxels) {
    if (v.id.empty()) throw Error("voxel set: empty voxel id");
    if (!seen.insert(v.id).second) throw Error("voxel set: duplicate voxel id '" + v.id + "'");
    if (!std::isfinite(v.x_mm) || !std::isfinite(v.y_mm) || !std::isfinite(v.z_mm)) {
      throw Error("voxel set: non-finite coordinates for voxel '" + v.id + "'");
    }
  }
}

VoxelSet read_voxels(const std::filesystem::path& path) {
  const auto tsv = io::read_tsv(path);
  const auto c_id = tsv.column("voxel_id");
  const auto c_x = tsv.column("x_mm");
  const auto c_y = tsv.column("y_mm");
  const auto c_z = tsv.column("z_mm");
  auto optional_column = [&](std::string_view name) -> long {
    const auto it = std::find(tsv.header.begin(), tsv.header.end(), name);
    return it == tsv.header.end() ? -1 : static_cast<long>(it - tsv.header.begin());
  };
  const long c_t = optional_column("t_face");
  const long c_g = optional_column("var_gain_pct");
  const long c_r = optional_column("region");
  VoxelSet set;
  for (const auto& row : tsv.rows) {
    Voxel v;
    v.id = row[c_id];
    if (row[c_x].empty() || row[c_y].empty() || row[c_z].empty()) {
      throw Error(path.string() + ": missing coordinates for voxel '" + v.id + "'");
    }
    v.x_mm = io::parse_number(row[c_x], "x_mm");
    v.y_mm = io::parse_number(row[c_y], "y_mm");
    v.z_mm = io::parse_number(row[c_z], "z_mm");
    if (c_t >= 0) v.t_face = io::parse_number(row[static_cast<std::size_t>(c_t)], "t_face");
    if (c_g >= 0) v.var_gain_pct = io::parse_number(row[static_cast<std::size_t>(c_g)], "var_gain_pct");
    if (c_r >= 0) v.region = parse_region(row[static_cast<std::size_t>(c_r)]);
    set.voxels.push_back(std::move(v));
  }
  set.validate();
  return set;
}

void write_voxels(const std::filesystem::path& path, const VoxelSet& set) {
  io::TsvTable tsv;
  tsv.header = {"voxel_id", "x_mm", "y_mm", "z_mm", "t_face", "var_gain_pct", "region"};
  for (const auto& v : set.voxels) {
    tsv.rows.push_back({v.id, io::format_number(v.x_mm), io::format_number(v.y_mm), io::format_number(v.z_mm),
                        io::format_number(v.t_face), io::format_number(v.var_gain_pct), std::string(to_string(v.region))});
  }
  io::write_tsv(path, tsv);
}

double adjusted_r2(double r2, Index n_observations, Index n_predictors) {
  const Index df = n_observations - n_predictors - 1;
  if (df <= 0) {
    throw Error("adjusted_r2: no residual degrees of freedom (n=" + std::to_string(n_observations) +
                ", p=" + std::to_string(n_predictors) + ")");
  }
  return 1.0 - (1.0 - r2) * static_cast<double>(n_observations - 1) / static_cast<double>(df);
}

VoxelSet score_voxels(VoxelSet set, const ModelFitStats& baseline, const ModelFitStats& full, const Vector& t_face) {
  const auto n = static_cast<Index>(set.voxels.size());
  if (baseline.r_squared.size() != n || full.r_squared.size() != n || t_face.size() != n) {
    throw Error("score_voxels: per-voxel inputs do not match the voxel set size");
  }
  for (Index v = 0; v < n; ++v) {
    auto& voxel = set.voxels[static_cast<std::size_t>(v)];
    voxel.t_face = t_face(v);
    voxel.var_gain_pct = 100.0 * (adjusted_r2(full.r_squared(v), full.n_observations, full.n_predictors) -
                                  adjusted_r2(baseline.r_squared(v), baseline.n_observations, baseline.n_predictors));
  }
  return set;
}

bool passes_selection(double t_face, double var_gain_pct, double t_threshold, double gain_threshold_pct) {
  if (!(t_threshold > 0.0) || !(gain_threshold_pct > 0.0)) throw Error("select_voxels: thresholds must be positive");
  return std::max(t_face, 0.0) / t_threshold + std::max(var_gain_pct, 0.0) / gain_threshold_pct >= 1.0;
}

VoxelSet select_voxels(const VoxelSet& set, double t_threshold, double gain_threshold_pct) {
  if (!(t_threshold > 0.0) || !(gain_threshold_pct > 0.0)) throw Error("select_voxels: thresholds must be positive");
  VoxelSet out;
  for (const auto& v : set.voxels) {
    if (passes_selection(v.t_face, v.var_gain_pct, t_threshold, gain_threshold_pct)) out.voxels.push_back(v);
  }
  return out;
}

SegmentAxis parse_segment_axis(std::string_view text) {
  if (text == "z") return SegmentAxis::z;
  if (text == "y") return SegmentAxis::y;
  throw Error("segment axis must be 'z' or 'y', got '" + std::string(text) + "'");
}

std::string_view to_string(SegmentAxis axis) { return axis == SegmentAxis::z ? "z" : "y"; }

VoxelSet segment_regions(VoxelSet set, SegmentAxis axis) {
  set.validate();
  const std::size_t n = set.voxels.size();
  if (n < 3) throw Error("segment_regions: need at least 3 voxels");
  const auto& vs = set.voxels;
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return vs[a].y_mm != vs[b].y_mm ? vs[a].y_mm < vs[b].y_mm : vs[a].id < vs[b].id;
  });
  const std::size_t n_occ = n / 3;
  const auto rest = order.begin() + static_cast<std::ptrdiff_t>(n_occ);
  if (axis == SegmentAxis::z) {
    std::sort(rest, order.end(), [&](std::size_t a, std::size_t b) {
      return vs[a].z_mm != vs[b].z_mm ? vs[a].z_mm < vs[b].z_mm : vs[a].id < vs[b].id;
    });
  } else {
    std::sort(rest, order.end(), [&](std::size_t a, std::size_t b) {
      return vs[a].y_mm != vs[b].y_mm ? vs[a].y_mm > vs[b].y_mm : vs[a].id < vs[b].id;
    });
  }
  const std::size_t n_temporal = (n - n_occ) / 2;
  for (std::size_t k = 0; k < n; ++k) {
    const Region r = k < n_occ ? Region::occipital : k < n_occ + n_temporal ? Region::temporal : Region::frontoparietal;
    set.voxels[order[k]].region = r;
  }
  return set;
}

}  // namespace ldec
