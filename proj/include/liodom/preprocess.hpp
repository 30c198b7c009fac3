#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "liodom/point_cloud.hpp"

namespace liodom {

struct PlaneFitNormals {
  std::vector<Vec3> normals;
  std::vector<std::uint8_t> valid;
};

/// Per-point normal from the smallest-eigenvalue eigenvector of the covariance
/// of the point's k nearest neighbors (the point included), oriented so that
/// n . (-p) >= 0. Neighborhoods whose covariance has rank < 2 are invalid.
PlaneFitNormals estimate_normals_planefit(std::span<const Vec3> points, int k = 10);

struct RansacParams {
  double distance_threshold = 0.1;
  int iterations = 100;
  double min_inlier_fraction = 0.2;
  std::uint64_t seed = 7;
};

struct GroundRemoval {
  std::vector<std::size_t> kept;  // indices into the input, ascending
  Eigen::Vector4d plane = Eigen::Vector4d::Zero();  // n.p + d = 0, |n| = 1
  std::size_t inliers = 0;
  bool removed = false;  // false when no plane reached min_inlier_fraction
};

/// Finds the plane with the most inliers over the iteration budget and drops
/// its inliers, unless it holds less than min_inlier_fraction of the cloud.
/// Fewer than 3 points: everything is kept.
GroundRemoval ransac_ground_removal(std::span<const Vec3> points,
                                    const RansacParams& params);

struct VoxelParams {
  double initial_side = 0.3;
  double step = 0.01;
  std::size_t target = 10240;
  std::size_t tolerance = 100;
  int max_passes = 200;
};

/// Fixed-size voxel grid anchored at the origin. Each occupied voxel emits the
/// mean of its points and the renormalized mean of its normals; voxels are
/// emitted in lexicographic key order. Voxels whose mean normal vanishes are
/// dropped.
PreprocessedCloud voxel_downsample(std::span<const Vec3> points,
                                   std::span<const Vec3> normals, double side);

/// Number of occupied voxels at the given side length.
std::size_t voxel_count(std::span<const Vec3> points, double side);

struct AdaptiveDownsample {
  PreprocessedCloud cloud;
  double side = 0.0;
  int passes = 0;  // side-length adjustments performed
  bool under_target = false;     // input smaller than target - tolerance
  bool budget_exhausted = false; // closest result returned
};

/// Voxel downsampling whose side length is adjusted until the output count
/// lies in [target - tolerance, target + tolerance]. The first adjustment is
/// +-`step` (grow while there are too many voxels, shrink while too few); the
/// step doubles while the direction holds and, once the target has been
/// overshot, halves at every direction flip.
AdaptiveDownsample adaptive_voxel_downsample(std::span<const Vec3> points,
                                             std::span<const Vec3> normals,
                                             const VoxelParams& params);

struct PreprocessParams {
  int planefit_k = 10;
  RansacParams ransac;
  VoxelParams voxel;
};

struct PreprocessReport {
  std::size_t input_points = 0;
  std::size_t invalid_normals = 0;
  std::size_t ground_points = 0;
  double voxel_side = 0.0;
  int voxel_passes = 0;
  bool under_target = false;
  bool budget_exhausted = false;
};

/// Plane-fit normals, ground removal and adaptive voxel downsampling. Ground
/// removal and voxel binning are decided on positions and applied to points
/// and normals alike, so the output stays index-aligned.
PreprocessedCloud preprocess_scan(const PointCloud& scan, const PreprocessParams& params,
                                  PreprocessReport* report = nullptr);

}  // namespace liodom
