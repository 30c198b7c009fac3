#pragma once

#include <array>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace liodom {

using Vec3 = Eigen::Vector3d;
using Vec6 = Eigen::Matrix<double, 6, 1>;
using Mat3 = Eigen::Matrix3d;
using Mat4 = Eigen::Matrix4d;
using Mat36 = Eigen::Matrix<double, 3, 6>;

/// Flat (roll, pitch, yaw, tx, ty, tz) parameterization used by optimizers and
/// the network heads. Angles in radians.
using PoseVector = Vec6;

/// Rotation matrix R = Rz(yaw) * Ry(pitch) * Rx(roll), angles in radians
/// ordered (roll, pitch, yaw).
Mat3 euler_to_matrix(const Vec3& rpy);

/// Inverse of euler_to_matrix. Pitch is returned in [-pi/2, pi/2]; the result
/// is ill-conditioned near gimbal lock.
Vec3 matrix_to_euler(const Mat3& R);

/// Partial derivatives of euler_to_matrix with respect to roll, pitch, yaw.
std::array<Mat3, 3> euler_derivatives(const Vec3& rpy);

/// Relative rigid transform. `rpy` holds Euler angles (roll, pitch, yaw) in
/// radians, `t` the translation in meters. Maps points of frame k+1 into
/// frame k.
struct Pose {
  Vec3 rpy = Vec3::Zero();
  Vec3 t = Vec3::Zero();

  static Pose identity() { return {}; }
  static Pose from_vector(const PoseVector& p);
  static Pose from_matrix(const Mat4& T);
  static Pose from_rotation(const Mat3& R, const Vec3& t);

  PoseVector to_vector() const;
  Mat3 rotation() const { return euler_to_matrix(rpy); }
  Mat4 matrix() const;
  Eigen::Isometry3d isometry() const;
};

Pose compose(const Pose& outer, const Pose& inner);
Pose inverse(const Pose& T);

Vec3 apply_to_point(const Pose& T, const Vec3& v);
/// Rotation only; translation does not move normals.
Vec3 apply_to_normal(const Pose& T, const Vec3& n);

/// d(R v + t)/d(roll, pitch, yaw, tx, ty, tz) evaluated at p.
Mat36 point_jacobian(const PoseVector& p, const Vec3& v);

/// Geodesic angle of a rotation matrix, in [0, pi].
double rotation_angle(const Mat3& R);

/// Gradient of a scalar objective expressed in rotation-matrix / translation
/// form: dL/dR (entry-wise) and dL/dt.
struct RigidGradient {
  Mat3 dR = Mat3::Zero();
  Vec3 dt = Vec3::Zero();

  RigidGradient& operator+=(const RigidGradient& o) {
    dR += o.dR;
    dt += o.dt;
    return *this;
  }
};

/// Chain rule from (dL/dR, dL/dt) to the Euler pose vector at `rpy`.
PoseVector to_pose_vector_gradient(const RigidGradient& g, const Vec3& rpy);

/// Splits the gradient of L(outer * inner) into the gradients with respect to
/// each factor.
struct ComposeGradient {
  RigidGradient outer;
  RigidGradient inner;
};
ComposeGradient compose_backward(const Pose& outer, const Pose& inner,
                                 const RigidGradient& g);

}  // namespace liodom
