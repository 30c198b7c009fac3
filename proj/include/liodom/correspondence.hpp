#pragma once

#include <cstddef>
#include <vector>

#include "liodom/kdtree.hpp"
#include "liodom/point_cloud.hpp"
#include "liodom/range_image.hpp"

namespace liodom {

/// One matched pair. The source point and normal are already transformed
/// into the target frame; `source_index` locates the untransformed source in
/// the cloud the match was built from.
struct Correspondence {
  Vec3 source_point;
  Vec3 source_normal;
  Vec3 target_point;
  Vec3 target_normal;
  double distance = 0.0;
  std::size_t source_index = 0;
  std::size_t target_index = 0;
};

using CorrespondenceSet = std::vector<Correspondence>;

/// Exact nearest-neighbor index over DP_k. Throws std::invalid_argument for an
/// empty cloud.
KdIndex build_index(const PreprocessedCloud& target);

/// For every transformed source point, its nearest target point if closer than
/// max_dist. An empty result means no usable matches; callers decide whether
/// to abort.
CorrespondenceSet match_nearest(const PreprocessedCloud& source_transformed,
                                const KdIndex& index, const PreprocessedCloud& target,
                                double max_dist);

/// Same-pixel matching between the last maps and the remapped current maps.
/// A pixel contributes when its vertex and normal are valid in both. The
/// source index is the remapped map's `source` entry; the target index is the
/// flat pixel index.
CorrespondenceSet match_pixel(const VertexMap& last_vertices,
                              const VertexMap& current_remapped,
                              const NormalMap& last_normals,
                              const NormalMap& current_normals);

}  // namespace liodom
