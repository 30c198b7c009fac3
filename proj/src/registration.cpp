#include "liodom/registration.hpp"

#include <Eigen/Cholesky>

namespace liodom {

namespace {

using Mat6 = Eigen::Matrix<double, 6, 6>;

// Gauss-Newton step for alpha * sum r^2 + lambda * sum |e|^2 with frozen pairs.
PoseVector gauss_newton_step(const PoseVector& x, const PreprocessedCloud& source,
                             const CorrespondenceSet& C, const LossWeights& w) {
  const Pose pose = Pose::from_vector(x);
  const Mat3 R = pose.rotation();
  const auto dR = euler_derivatives(pose.rpy);
  Mat6 H = Mat6::Zero();
  PoseVector b = PoseVector::Zero();
  for (const auto& c : C) {
    const Vec3& ps = source.points[c.source_index];
    const Vec3& ns = source.normals[c.source_index];
    if (w.alpha > 0.0) {
      const double r = c.target_normal.dot(R * ps + pose.t - c.target_point);
      Eigen::Matrix<double, 1, 6> J;
      for (int k = 0; k < 3; ++k) J(k) = c.target_normal.dot(dR[k] * ps);
      J.tail<3>() = c.target_normal.transpose();
      H += w.alpha * J.transpose() * J;
      b += w.alpha * J.transpose() * r;
    }
    if (w.lambda > 0.0) {
      const Vec3 e = R * ns - c.target_normal;
      Mat36 J = Mat36::Zero();
      for (int k = 0; k < 3; ++k) J.col(k) = dR[k] * ns;
      H += w.lambda * J.transpose() * J;
      b += w.lambda * J.transpose() * e;
    }
  }
  const double damping = 1e-9 * std::max(H.trace(), 1e-12);
  H.diagonal().array() += damping;
  return -H.ldlt().solve(b);
}

}  // namespace

RegistrationResult register_clouds(const PreprocessedCloud& source,
                                   const PreprocessedCloud& target, const Pose& init,
                                   const RegistrationOptions& opts) {
  const KdIndex index = build_index(target);
  const LossWeights& w = opts.weights;
  RegistrationResult result;
  auto& diag = result.diagnostics;
  PoseVector x = init.to_vector();

  for (int outer = 0; outer < opts.max_outer_iterations; ++outer) {
    const Pose pose = Pose::from_vector(x);
    const CorrespondenceSet C = match_nearest(transform_cloud(source, pose), index, target,
                                              opts.max_correspondence_distance);
    if (C.empty()) {
      if (outer == 0) throw RegistrationError("registration: no correspondences at init", init);
      break;
    }
    diag.match_counts.push_back(C.size());
    ++diag.outer_iterations;

    double current = loss_at(pose, source, C, w).total;
    double round_update = 0.0;
    for (int inner = 0; inner < opts.max_inner_iterations; ++inner) {
      PoseVector dir = opts.policy == StepPolicy::GaussNewton
                           ? gauss_newton_step(x, source, C, w)
                           : PoseVector(-opts.descent_step * loss_gradient(x, source, C, w));
      if (!dir.allFinite()) break;
      bool accepted = false;
      for (int h = 0; h <= opts.max_halvings; ++h) {
        const PoseVector cand = x + dir;
        const double value = loss_at(Pose::from_vector(cand), source, C, w).total;
        if (value < current) {
          x = cand;
          current = value;
          accepted = true;
          break;
        }
        dir *= 0.5;
      }
      ++diag.inner_iterations;
      if (!accepted) break;
      round_update += dir.norm();
      if (dir.norm() < opts.tolerance) break;
    }
    diag.loss_trace.push_back(current);
    if (round_update < opts.tolerance) {
      diag.converged = true;
      break;
    }
  }

  Pose final_pose = Pose::from_vector(x);
  const CorrespondenceSet C = match_nearest(transform_cloud(source, final_pose), index,
                                            target, opts.max_correspondence_distance);
  if (C.empty()) {
    throw RegistrationError("registration: no correspondences at final pose", init);
  }
  diag.final_loss = loss_at(final_pose, source, C, w);
  diag.init_loss = loss_at(init, source, C, w);
  if (diag.init_loss.total < diag.final_loss.total) {
    final_pose = init;
    diag.final_loss = diag.init_loss;
    diag.reverted_to_init = true;
  }
  result.pose = final_pose;
  return result;
}

}  // namespace liodom
