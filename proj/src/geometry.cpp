#include "liodom/geometry.hpp"

#include <algorithm>
#include <cmath>

namespace liodom {

namespace {

Mat3 rot_x(double a) {
  const double c = std::cos(a), s = std::sin(a);
  Mat3 R;
  R << 1, 0, 0, 0, c, -s, 0, s, c;
  return R;
}

Mat3 rot_y(double a) {
  const double c = std::cos(a), s = std::sin(a);
  Mat3 R;
  R << c, 0, s, 0, 1, 0, -s, 0, c;
  return R;
}

Mat3 rot_z(double a) {
  const double c = std::cos(a), s = std::sin(a);
  Mat3 R;
  R << c, -s, 0, s, c, 0, 0, 0, 1;
  return R;
}

Mat3 d_rot_x(double a) {
  const double c = std::cos(a), s = std::sin(a);
  Mat3 R;
  R << 0, 0, 0, 0, -s, -c, 0, c, -s;
  return R;
}

Mat3 d_rot_y(double a) {
  const double c = std::cos(a), s = std::sin(a);
  Mat3 R;
  R << -s, 0, c, 0, 0, 0, -c, 0, -s;
  return R;
}

Mat3 d_rot_z(double a) {
  const double c = std::cos(a), s = std::sin(a);
  Mat3 R;
  R << -s, -c, 0, c, -s, 0, 0, 0, 0;
  return R;
}

}  // namespace

Mat3 euler_to_matrix(const Vec3& rpy) {
  return rot_z(rpy.z()) * rot_y(rpy.y()) * rot_x(rpy.x());
}

Vec3 matrix_to_euler(const Mat3& R) {
  const double pitch = std::asin(std::clamp(-R(2, 0), -1.0, 1.0));
  const double roll = std::atan2(R(2, 1), R(2, 2));
  const double yaw = std::atan2(R(1, 0), R(0, 0));
  return {roll, pitch, yaw};
}

std::array<Mat3, 3> euler_derivatives(const Vec3& rpy) {
  const Mat3 Rx = rot_x(rpy.x()), Ry = rot_y(rpy.y()), Rz = rot_z(rpy.z());
  return {Rz * Ry * d_rot_x(rpy.x()), Rz * d_rot_y(rpy.y()) * Rx,
          d_rot_z(rpy.z()) * Ry * Rx};
}

Pose Pose::from_vector(const PoseVector& p) {
  return {p.head<3>(), p.tail<3>()};
}

Pose Pose::from_matrix(const Mat4& T) {
  return {matrix_to_euler(T.topLeftCorner<3, 3>()), T.topRightCorner<3, 1>()};
}

Pose Pose::from_rotation(const Mat3& R, const Vec3& t) {
  return {matrix_to_euler(R), t};
}

PoseVector Pose::to_vector() const {
  PoseVector p;
  p << rpy, t;
  return p;
}

Mat4 Pose::matrix() const {
  Mat4 T = Mat4::Identity();
  T.topLeftCorner<3, 3>() = rotation();
  T.topRightCorner<3, 1>() = t;
  return T;
}

Eigen::Isometry3d Pose::isometry() const {
  Eigen::Isometry3d iso = Eigen::Isometry3d::Identity();
  iso.linear() = rotation();
  iso.translation() = t;
  return iso;
}

Pose compose(const Pose& outer, const Pose& inner) {
  const Mat3 Ro = outer.rotation();
  return Pose::from_rotation(Ro * inner.rotation(), Ro * inner.t + outer.t);
}

Pose inverse(const Pose& T) {
  const Mat3 Rt = T.rotation().transpose();
  return Pose::from_rotation(Rt, -Rt * T.t);
}

Vec3 apply_to_point(const Pose& T, const Vec3& v) {
  return T.rotation() * v + T.t;
}

Vec3 apply_to_normal(const Pose& T, const Vec3& n) { return T.rotation() * n; }

Mat36 point_jacobian(const PoseVector& p, const Vec3& v) {
  const auto dR = euler_derivatives(p.head<3>());
  Mat36 J;
  for (int k = 0; k < 3; ++k) J.col(k) = dR[k] * v;
  J.rightCols<3>().setIdentity();
  return J;
}

double rotation_angle(const Mat3& R) {
  // atan2 of sine and cosine stays accurate near 0 where acos(trace) loses
  // half the digits
  const double c = 0.5 * (R.trace() - 1.0);
  const double s = 0.5 * Vec3(R(2, 1) - R(1, 2), R(0, 2) - R(2, 0), R(1, 0) - R(0, 1)).norm();
  return std::atan2(s, c);
}

PoseVector to_pose_vector_gradient(const RigidGradient& g, const Vec3& rpy) {
  const auto dR = euler_derivatives(rpy);
  PoseVector out;
  for (int k = 0; k < 3; ++k) out(k) = g.dR.cwiseProduct(dR[k]).sum();
  out.tail<3>() = g.dt;
  return out;
}

ComposeGradient compose_backward(const Pose& outer, const Pose& inner,
                                 const RigidGradient& g) {
  const Mat3 Ro = outer.rotation();
  const Mat3 Ri = inner.rotation();
  ComposeGradient out;
  out.outer.dR = g.dR * Ri.transpose() + g.dt * inner.t.transpose();
  out.outer.dt = g.dt;
  out.inner.dR = Ro.transpose() * g.dR;
  out.inner.dt = Ro.transpose() * g.dt;
  return out;
}

}  // namespace liodom
