#pragma once

#include <vector>

#include "liodom/geometry.hpp"

namespace liodom {

/// Ordered 3D points in the lidar frame (meters). `normals` is either empty or
/// index-aligned with `points`.
struct PointCloud {
  std::vector<Vec3> points;
  std::vector<Vec3> normals;

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
  bool has_normals() const { return !normals.empty(); }
};

/// Loss-side cloud: downsampled points DP with unit normals NP, index-aligned.
struct PreprocessedCloud {
  std::vector<Vec3> points;
  std::vector<Vec3> normals;

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
};

/// Applies R p + t to every point and R n to every normal.
PreprocessedCloud transform_cloud(const PreprocessedCloud& cloud, const Pose& T);
PointCloud transform_cloud(const PointCloud& cloud, const Pose& T);

}  // namespace liodom
