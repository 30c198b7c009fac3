#include "liodom/point_cloud.hpp"

namespace liodom {

PreprocessedCloud transform_cloud(const PreprocessedCloud& cloud, const Pose& T) {
  const Mat3 R = T.rotation();
  PreprocessedCloud out;
  out.points.reserve(cloud.points.size());
  out.normals.reserve(cloud.normals.size());
  for (const auto& p : cloud.points) out.points.push_back(R * p + T.t);
  for (const auto& n : cloud.normals) out.normals.push_back(R * n);
  return out;
}

PointCloud transform_cloud(const PointCloud& cloud, const Pose& T) {
  const Mat3 R = T.rotation();
  PointCloud out;
  out.points.reserve(cloud.points.size());
  out.normals.reserve(cloud.normals.size());
  for (const auto& p : cloud.points) out.points.push_back(R * p + T.t);
  for (const auto& n : cloud.normals) out.normals.push_back(R * n);
  return out;
}

}  // namespace liodom
