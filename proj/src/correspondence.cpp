#include "liodom/correspondence.hpp"

#include <cmath>
#include <stdexcept>

#include "liodom/errors.hpp"

namespace liodom {

KdIndex build_index(const PreprocessedCloud& target) {
  if (target.empty()) throw std::invalid_argument("build_index: empty target cloud");
  return KdIndex(target.points);
}

CorrespondenceSet match_nearest(const PreprocessedCloud& source_transformed,
                                const KdIndex& index, const PreprocessedCloud& target,
                                double max_dist) {
  CorrespondenceSet out;
  out.reserve(source_transformed.size());
  const double max_sq = max_dist * max_dist;
  for (std::size_t i = 0; i < source_transformed.size(); ++i) {
    const Vec3& p = source_transformed.points[i];
    const Neighbor nb = index.nearest(p);
    if (nb.squared_distance > max_sq) continue;
    out.push_back({p, source_transformed.normals[i], target.points[nb.index],
                   target.normals[nb.index], std::sqrt(nb.squared_distance), i,
                   nb.index});
  }
  return out;
}

CorrespondenceSet match_pixel(const VertexMap& last_vertices,
                              const VertexMap& current_remapped,
                              const NormalMap& last_normals,
                              const NormalMap& current_normals) {
  const auto same = [](const MapGrid& a, const MapGrid& b) {
    return a.height == b.height && a.width == b.width;
  };
  if (!same(last_vertices, current_remapped) || !same(last_vertices, last_normals) ||
      !same(last_vertices, current_normals)) {
    throw ShapeError("match_pixel: maps differ in shape");
  }
  CorrespondenceSet out;
  for (std::size_t k = 0; k < last_vertices.values.size(); ++k) {
    if (!last_vertices.valid[k] || !current_remapped.valid[k] || !last_normals.valid[k] ||
        !current_normals.valid[k]) {
      continue;
    }
    const Vec3& s = current_remapped.values[k];
    const Vec3& t = last_vertices.values[k];
    out.push_back({s, current_normals.values[k], t, last_normals.values[k], (s - t).norm(),
                   static_cast<std::size_t>(current_remapped.source[k]), k});
  }
  return out;
}

}  // namespace liodom
