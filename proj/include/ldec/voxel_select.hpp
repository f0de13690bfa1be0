#pragma once
// Voxel selection (face responsiveness x latent goodness-of-fit) and the
// equal-thirds anatomical split into occipital / temporal / frontoparietal.

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "ldec/types.hpp"

namespace ldec {

enum class Region { occipital, temporal, frontoparietal, unassigned };

std::string_view to_string(Region r);
Region parse_region(std::string_view text);

// Coordinates in mm: x left-right, y posterior-anterior, z inferior-superior.
struct Voxel {
  std::string id;
  double x_mm = 0.0;
  double y_mm = 0.0;
  double z_mm = 0.0;
  double t_face = 0.0;
  double var_gain_pct = 0.0;
  Region region = Region::unassigned;
};

struct VoxelSet {
  std::vector<Voxel> voxels;

  std::size_t size() const { return voxels.size(); }
  std::vector<std::string> ids() const;
  std::vector<std::string> ids_in(Region region) const;
  void validate() const;
};

// Reads voxel_id, x_mm, y_mm, z_mm and, when present, t_face, var_gain_pct, region.
VoxelSet read_voxels(const std::filesystem::path& path);
void write_voxels(const std::filesystem::path& path, const VoxelSet& set);

// Per-voxel goodness of fit of one GLM.
struct ModelFitStats {
  Vector r_squared;
  Index n_observations = 0;
  Index n_predictors = 0;  // excluding the intercept
};

// 1 - (1 - r2) (n - 1) / (n - p - 1)
double adjusted_r2(double r2, Index n_observations, Index n_predictors);

// t_face copied in; var_gain_pct = 100 * (adjR2_full - adjR2_baseline).
VoxelSet score_voxels(VoxelSet set, const ModelFitStats& baseline, const ModelFitStats& full, const Vector& t_face);

// Linear boundary through (t_threshold, 0) and (0, gain_threshold_pct) on
// clamped scores; either criterion alone suffices at its threshold.
bool passes_selection(double t_face, double var_gain_pct, double t_threshold = 4.0, double gain_threshold_pct = 8.0);

VoxelSet select_voxels(const VoxelSet& set, double t_threshold = 4.0, double gain_threshold_pct = 8.0);

// Axis used to split the non-occipital voxels in two.
enum class SegmentAxis {
  z,  // inferior half -> temporal
  y,  // anterior half -> temporal
};

SegmentAxis parse_segment_axis(std::string_view text);
std::string_view to_string(SegmentAxis axis);

// Most posterior floor(n/3) voxels are occipital; the rest are halved along
// `axis`. Ties break on voxel id.
VoxelSet segment_regions(VoxelSet set, SegmentAxis axis = SegmentAxis::z);

}  // namespace ldec
