#include "liodom/loss.hpp"

#include <cmath>

#include "liodom/errors.hpp"

namespace liodom {

namespace {

void require_matches(const CorrespondenceSet& C) {
  if (C.empty()) throw NumericalError("loss evaluated on an empty correspondence set");
}

double sign(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

}  // namespace

double point_to_plane_loss(const CorrespondenceSet& C) {
  require_matches(C);
  double sum = 0.0;
  for (const auto& c : C) sum += std::abs(c.target_normal.dot(c.source_point - c.target_point));
  return sum;
}

double plane_to_plane_loss(const CorrespondenceSet& C) {
  require_matches(C);
  double sum = 0.0;
  for (const auto& c : C) sum += (c.source_normal - c.target_normal).squaredNorm();
  return sum;
}

LossTerms evaluate_loss(const CorrespondenceSet& C, const LossWeights& w) {
  LossTerms out;
  out.point_to_plane = point_to_plane_loss(C);
  out.plane_to_plane = plane_to_plane_loss(C);
  out.total = w.alpha * out.point_to_plane + w.lambda * out.plane_to_plane;
  return out;
}

double total_loss(const CorrespondenceSet& C, const LossWeights& w) {
  return evaluate_loss(C, w).total;
}

LossTerms loss_at(const Pose& pose, const PreprocessedCloud& source,
                  const CorrespondenceSet& C, const LossWeights& w) {
  require_matches(C);
  const Mat3 R = pose.rotation();
  LossTerms out;
  for (const auto& c : C) {
    const Vec3 p = R * source.points[c.source_index] + pose.t;
    const Vec3 n = R * source.normals[c.source_index];
    out.point_to_plane += std::abs(c.target_normal.dot(p - c.target_point));
    out.plane_to_plane += (n - c.target_normal).squaredNorm();
  }
  out.total = w.alpha * out.point_to_plane + w.lambda * out.plane_to_plane;
  return out;
}

RigidGradient loss_rigid_gradient(const Pose& pose, const PreprocessedCloud& source,
                                  const CorrespondenceSet& C, const LossWeights& w) {
  const Mat3 R = pose.rotation();
  RigidGradient g;
  for (const auto& c : C) {
    const Vec3& ps = source.points[c.source_index];
    const Vec3& ns = source.normals[c.source_index];
    const Vec3 p = R * ps + pose.t;
    const Vec3 gp = w.alpha * sign(c.target_normal.dot(p - c.target_point)) * c.target_normal;
    const Vec3 gn = 2.0 * w.lambda * (R * ns - c.target_normal);
    g.dR += gp * ps.transpose() + gn * ns.transpose();
    g.dt += gp;
  }
  return g;
}

PoseVector loss_gradient(const PoseVector& p, const PreprocessedCloud& source,
                         const CorrespondenceSet& C, const LossWeights& w) {
  const Pose pose = Pose::from_vector(p);
  return to_pose_vector_gradient(loss_rigid_gradient(pose, source, C, w), pose.rpy);
}

}  // namespace liodom
