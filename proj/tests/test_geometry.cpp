#include <gtest/gtest.h>

#include <random>

#include "liodom/geometry.hpp"
#include "liodom/point_cloud.hpp"

using namespace liodom;

namespace {

constexpr double kPi = M_PI;

Pose random_pose(std::mt19937_64& rng, double angle = 1.0, double trans = 2.0) {
  std::uniform_real_distribution<double> a(-angle, angle), t(-trans, trans);
  return Pose{Vec3(a(rng), a(rng), a(rng)), Vec3(t(rng), t(rng), t(rng))};
}

// elementary rotations written out by hand
Mat3 rx(double a) {
  Mat3 R;
  R << 1, 0, 0, 0, std::cos(a), -std::sin(a), 0, std::sin(a), std::cos(a);
  return R;
}
Mat3 ry(double a) {
  Mat3 R;
  R << std::cos(a), 0, std::sin(a), 0, 1, 0, -std::sin(a), 0, std::cos(a);
  return R;
}
Mat3 rz(double a) {
  Mat3 R;
  R << std::cos(a), -std::sin(a), 0, std::sin(a), std::cos(a), 0, 0, 0, 1;
  return R;
}

}  // namespace

TEST(Euler, IdentityAndQuarterTurns) {
  EXPECT_TRUE(euler_to_matrix(Vec3::Zero()).isApprox(Mat3::Identity()));
  const Vec3 a = euler_to_matrix(Vec3(0, 0, kPi / 2)) * Vec3(1, 0, 0);
  EXPECT_NEAR((a - Vec3(0, 1, 0)).norm(), 0.0, 1e-12);
  const Vec3 b = euler_to_matrix(Vec3(kPi / 2, 0, 0)) * Vec3(0, 1, 0);
  EXPECT_NEAR((b - Vec3(0, 0, 1)).norm(), 0.0, 1e-12);
}

TEST(Euler, MatchesZyxProductAndRoundTrips) {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 50; ++i) {
    const Pose p = random_pose(rng, 1.2);
    const Mat3 R = rz(p.rpy.z()) * ry(p.rpy.y()) * rx(p.rpy.x());
    EXPECT_LT((euler_to_matrix(p.rpy) - R).norm(), 1e-12);
    EXPECT_LT((matrix_to_euler(R) - p.rpy).norm(), 1e-10);
  }
}

TEST(Euler, DerivativesMatchFiniteDifferences) {
  std::mt19937_64 rng(4);
  const double h = 1e-6;
  for (int i = 0; i < 20; ++i) {
    const Vec3 q = random_pose(rng).rpy;
    const auto d = euler_derivatives(q);
    for (int k = 0; k < 3; ++k) {
      Vec3 qp = q, qm = q;
      qp[k] += h;
      qm[k] -= h;
      const Mat3 fd = (euler_to_matrix(qp) - euler_to_matrix(qm)) / (2 * h);
      EXPECT_LT((fd - d[k]).norm(), 1e-8);
    }
  }
}

TEST(Pose, ComposeExamples) {
  const Pose shift{Vec3::Zero(), Vec3(1, 0, 0)};
  const Pose a = compose(Pose::identity(), shift);
  EXPECT_LT((a.t - Vec3(1, 0, 0)).norm(), 1e-15);
  EXPECT_LT(a.rpy.norm(), 1e-15);

  const Pose b = compose(Pose{Vec3(0, 0, kPi / 2), Vec3::Zero()}, shift);
  EXPECT_LT((b.t - Vec3(0, 1, 0)).norm(), 1e-12);
  EXPECT_NEAR(b.rpy.z(), kPi / 2, 1e-12);

  std::mt19937_64 rng(5);
  for (int i = 0; i < 20; ++i) {
    const Pose T = random_pose(rng);
    const Pose I = compose(T, inverse(T));
    EXPECT_LT(I.t.norm(), 1e-9);
    EXPECT_LT(rotation_angle(I.rotation()), 1e-9);
    const Pose U = random_pose(rng);
    EXPECT_LT((compose(T, U).matrix() - T.matrix() * U.matrix()).norm(), 1e-12);
  }
}

TEST(Pose, ApplyExamples) {
  EXPECT_EQ(apply_to_point(Pose::identity(), Vec3(3, 2, 1)), Vec3(3, 2, 1));
  EXPECT_LT((apply_to_point(Pose{Vec3::Zero(), Vec3(0, 0, 5)}, Vec3(1, 1, 0)) - Vec3(1, 1, 5)).norm(),
            1e-15);
  const Pose half{Vec3(0, 0, kPi), Vec3::Zero()};
  EXPECT_LT((apply_to_point(half, Vec3(1, 0, 0)) - Vec3(-1, 0, 0)).norm(), 1e-12);
  EXPECT_LT((apply_to_normal(Pose{Vec3::Zero(), Vec3(9, 9, 9)}, Vec3(0, 0, 1)) - Vec3(0, 0, 1)).norm(),
            1e-15);
  EXPECT_LT((apply_to_normal(half, Vec3(1, 0, 0)) - Vec3(-1, 0, 0)).norm(), 1e-12);

  std::mt19937_64 rng(6);
  for (int i = 0; i < 20; ++i) {
    const Vec3 n = Vec3::Random().normalized();
    EXPECT_NEAR(apply_to_normal(random_pose(rng), n).norm(), 1.0, 1e-9);
  }
}

TEST(Pose, MatrixRoundTrip) {
  std::mt19937_64 rng(7);
  for (int i = 0; i < 20; ++i) {
    const Pose p = random_pose(rng);
    const Pose q = Pose::from_matrix(p.matrix());
    EXPECT_LT((q.to_vector() - p.to_vector()).norm(), 1e-10);
    EXPECT_LT((Pose::from_vector(p.to_vector()).matrix() - p.matrix()).norm(), 1e-15);
  }
}

TEST(PointJacobian, Examples) {
  const Mat36 J0 = point_jacobian(PoseVector::Zero(), Vec3::Zero());
  EXPECT_LT(J0.leftCols<3>().norm(), 1e-15);
  EXPECT_TRUE(J0.rightCols<3>().isApprox(Mat3::Identity()));
  const Mat36 J1 = point_jacobian(PoseVector::Zero(), Vec3(1, 0, 0));
  EXPECT_LT((J1.col(2) - Vec3(0, 1, 0)).norm(), 1e-15);
}

TEST(PointJacobian, FiniteDifferences) {
  std::mt19937_64 rng(8);
  const double h = 1e-6;
  for (int i = 0; i < 30; ++i) {
    const PoseVector p = random_pose(rng).to_vector();
    const Vec3 v = Vec3::Random() * 3.0;
    const Mat36 J = point_jacobian(p, v);
    Mat36 fd;
    for (int k = 0; k < 6; ++k) {
      PoseVector pp = p, pm = p;
      pp[k] += h;
      pm[k] -= h;
      fd.col(k) = (apply_to_point(Pose::from_vector(pp), v) - apply_to_point(Pose::from_vector(pm), v)) /
                  (2 * h);
    }
    EXPECT_LT((fd - J).norm() / J.norm(), 1e-5);
  }
}

TEST(RotationAngle, KnownAngles) {
  EXPECT_NEAR(rotation_angle(Mat3::Identity()), 0.0, 1e-15);
  EXPECT_NEAR(rotation_angle(rz(0.3)), 0.3, 1e-12);
  EXPECT_NEAR(rotation_angle(rx(-1.1)), 1.1, 1e-12);
  EXPECT_NEAR(rotation_angle(rz(kPi)), kPi, 1e-9);
}

TEST(ComposeBackward, FiniteDifferences) {
  // L(T) = sum W .* [R t] for a fixed random W
  std::mt19937_64 rng(9);
  const Mat3 WR = Mat3::Random();
  const Vec3 Wt = Vec3::Random();
  auto L = [&](const Pose& T) { return (WR.cwiseProduct(T.rotation())).sum() + Wt.dot(T.t); };
  const double h = 1e-6;
  for (int i = 0; i < 10; ++i) {
    const Pose outer = random_pose(rng), inner = random_pose(rng);
    const auto g = compose_backward(outer, inner, RigidGradient{WR, Wt});
    const PoseVector go = to_pose_vector_gradient(g.outer, outer.rpy);
    const PoseVector gi = to_pose_vector_gradient(g.inner, inner.rpy);
    for (int k = 0; k < 6; ++k) {
      PoseVector e = PoseVector::Zero();
      e[k] = h;
      const auto oo = outer.to_vector(), ii = inner.to_vector();
      const double fo = (L(compose(Pose::from_vector(oo + e), inner)) -
                         L(compose(Pose::from_vector(oo - e), inner))) / (2 * h);
      const double fi = (L(compose(outer, Pose::from_vector(ii + e))) -
                         L(compose(outer, Pose::from_vector(ii - e)))) / (2 * h);
      EXPECT_NEAR(go[k], fo, 1e-6 * std::max(1.0, std::abs(fo)));
      EXPECT_NEAR(gi[k], fi, 1e-6 * std::max(1.0, std::abs(fi)));
    }
  }
}

TEST(PointCloud, TransformMovesPointsAndRotatesNormals) {
  PreprocessedCloud c;
  c.points = {Vec3(1, 0, 0), Vec3(0, 2, 0)};
  c.normals = {Vec3(1, 0, 0), Vec3(0, 0, 1)};
  const Pose T{Vec3(0, 0, kPi / 2), Vec3(0, 0, 1)};
  const auto m = transform_cloud(c, T);
  EXPECT_LT((m.points[0] - Vec3(0, 1, 1)).norm(), 1e-12);
  EXPECT_LT((m.points[1] - Vec3(-2, 0, 1)).norm(), 1e-12);
  EXPECT_LT((m.normals[0] - Vec3(0, 1, 0)).norm(), 1e-12);
  EXPECT_LT((m.normals[1] - Vec3(0, 0, 1)).norm(), 1e-12);
}
