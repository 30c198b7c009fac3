#pragma once

#include <cstdint>
#include <vector>

#include "liodom/geometry.hpp"
#include "liodom/point_cloud.hpp"

namespace liodom {

/// Spherical projection window. Angles and densities in degrees.
///
/// Column w = floor((fov_horizontal - atan2(y, x)) / eta_w) covers the full
/// sweep when fov_horizontal = 180. Row h = floor((fov_up - asin(z / d)) / eta_h)
/// covers elevations in (fov_up - height * eta_h, fov_up].
struct ProjectionConfig {
  double fov_horizontal_deg = 180.0;
  double fov_up_deg = 23.0;
  double eta_w_deg = 0.5;
  double eta_h_deg = 0.5;
  int height = 52;
  int width = 720;

  /// Window matching the HDL-64E vertical field: (-23, +3] degrees.
  static ProjectionConfig kitti();

  /// Throws ShapeError unless width == 2 * fov_horizontal / eta_w and all
  /// values are positive.
  void validate() const;
};

/// H x W grid of 3-vectors with a validity mask. `source` records, for each
/// valid pixel, the index of the input point that won the pixel (-1 when
/// invalid).
struct MapGrid {
  int height = 0;
  int width = 0;
  std::vector<Vec3> values;
  std::vector<std::uint8_t> valid;
  std::vector<int> source;

  MapGrid() = default;
  MapGrid(int h, int w)
      : height(h),
        width(w),
        values(static_cast<std::size_t>(h) * w, Vec3::Zero()),
        valid(static_cast<std::size_t>(h) * w, 0),
        source(static_cast<std::size_t>(h) * w, -1) {}

  std::size_t index(int h, int w) const {
    return static_cast<std::size_t>(h) * width + w;
  }
  const Vec3& at(int h, int w) const { return values[index(h, w)]; }
  bool is_valid(int h, int w) const { return valid[index(h, w)] != 0; }
  std::size_t valid_count() const;
};

struct VertexMap : MapGrid {
  using MapGrid::MapGrid;
};

struct NormalMap : MapGrid {
  using MapGrid::MapGrid;
};

struct PixelCoord {
  int w = 0;
  int h = 0;
};

/// Pixel of a point under the projection, or false when d = 0 or the pixel is
/// outside the grid.
bool pixel_of(const Vec3& p, const ProjectionConfig& cfg, PixelCoord& out);

struct ProjectionStats {
  std::size_t non_finite = 0;
  std::size_t zero_depth = 0;
  std::size_t out_of_window = 0;
};

/// Projects a cloud into a vertex map; pixel collisions keep the point with
/// minimum depth. Non-finite points and points at the origin are skipped and
/// counted in `stats`.
VertexMap project(const PointCloud& cloud, const ProjectionConfig& cfg,
                  ProjectionStats* stats = nullptr);

/// Normal map from 4-neighborhoods (up, right, down, left) with depth-difference
/// weights exp(-0.5 |d_a - d_b|). Pixels lacking any neighbor, or whose sum of
/// weighted cross products vanishes, are invalid. Valid normals are unit length.
NormalMap compute_normal_map(const VertexMap& V);

struct RemappedMaps {
  VertexMap vertices;
  NormalMap normals;
};

/// Moves every valid vertex by R v + t and every valid normal by R n, then
/// re-projects into a fresh grid of identical shape (minimum depth wins).
/// `source` of the output refers to the flat pixel index in the input maps.
RemappedMaps remap(const VertexMap& V, const NormalMap& N, const Pose& T,
                   const ProjectionConfig& cfg);

}  // namespace liodom
