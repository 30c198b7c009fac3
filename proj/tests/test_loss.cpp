#include <gtest/gtest.h>

#include <random>

#include "liodom/errors.hpp"
#include "liodom/loss.hpp"

using namespace liodom;

namespace {

Correspondence tuple(const Vec3& src, const Vec3& src_n, const Vec3& tgt, const Vec3& tgt_n) {
  Correspondence c;
  c.source_point = src;
  c.source_normal = src_n;
  c.target_point = tgt;
  c.target_normal = tgt_n;
  c.distance = (src - tgt).norm();
  return c;
}

// Three orthogonal planes with a little clutter, target = T * source.
struct PlaneScene {
  PreprocessedCloud source, target;
};

PlaneScene plane_scene(std::uint64_t seed, const Pose& motion) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-3, 3);
  PlaneScene s;
  for (int i = 0; i < 300; ++i) {
    const int plane = i % 3;
    Vec3 p(u(rng), u(rng), u(rng));
    Vec3 n = Vec3::Zero();
    p[plane] = plane == 2 ? -1.5 : 4.0;
    n[plane] = plane == 2 ? 1.0 : -1.0;
    s.target.points.push_back(p);
    s.target.normals.push_back(n);
  }
  const Pose inv = inverse(motion);
  for (std::size_t i = 0; i < s.target.size(); ++i) {
    s.source.points.push_back(apply_to_point(inv, s.target.points[i]));
    s.source.normals.push_back(apply_to_normal(inv, s.target.normals[i]));
  }
  return s;
}

CorrespondenceSet index_pairs(const PlaneScene& s, const Pose& at) {
  CorrespondenceSet C;
  for (std::size_t i = 0; i < s.source.size(); ++i) {
    auto c = tuple(apply_to_point(at, s.source.points[i]), apply_to_normal(at, s.source.normals[i]),
                   s.target.points[i], s.target.normals[i]);
    c.source_index = c.target_index = i;
    C.push_back(c);
  }
  return C;
}

}  // namespace

TEST(Loss, HandComputedTuples) {
  const CorrespondenceSet po = {
      tuple(Vec3(0.3, 0.4, 0.5), Vec3(0, 0, 1), Vec3(0, 0, 0), Vec3(0, 0, 1))};
  EXPECT_EQ(point_to_plane_loss(po), 0.5);
  const CorrespondenceSet pl = {tuple(Vec3::Zero(), Vec3(1, 0, 0), Vec3::Zero(), Vec3(0, 1, 0))};
  EXPECT_EQ(plane_to_plane_loss(pl), 2.0);
  const CorrespondenceSet flip = {tuple(Vec3::Zero(), Vec3(0, 0, -1), Vec3::Zero(), Vec3(0, 0, 1))};
  EXPECT_EQ(plane_to_plane_loss(flip), 4.0);

  // point-to-plane 0.5 and plane-to-plane 2 in one tuple
  const CorrespondenceSet both = {
      tuple(Vec3(0.3, 0.4, 0.5), Vec3(1, 0, 0), Vec3::Zero(), Vec3(0, 0, 1))};
  const auto t = evaluate_loss(both, LossWeights{});
  EXPECT_EQ(t.point_to_plane, 0.5);
  EXPECT_EQ(t.plane_to_plane, 2.0);
  EXPECT_NEAR(t.total, 0.7, 1e-15);
  EXPECT_EQ(total_loss(both, LossWeights{0.0, 0.0}), 0.0);
}

TEST(Loss, DefaultsAndEdgeCases) {
  const LossWeights w;
  EXPECT_EQ(w.alpha, 1.0);
  EXPECT_EQ(w.lambda, 0.1);
  const CorrespondenceSet slide = {tuple(Vec3(2, -1, 0), Vec3(0, 0, 1), Vec3::Zero(), Vec3(0, 0, 1))};
  EXPECT_EQ(point_to_plane_loss(slide), 0.0);
  EXPECT_THROW(point_to_plane_loss({}), NumericalError);
  EXPECT_THROW(plane_to_plane_loss({}), NumericalError);
}

TEST(Loss, IdenticalCloudsAtIdentity) {
  const auto s = plane_scene(1, Pose::identity());
  const auto C = index_pairs(s, Pose::identity());
  EXPECT_LT(total_loss(C, LossWeights{}), 1e-9);
  const PoseVector g = loss_gradient(PoseVector::Zero(), s.source, C, LossWeights{});
  EXPECT_LT(g.norm(), 1e-9);
}

TEST(Loss, LossAtReproducesEvaluation) {
  const Pose motion{Vec3(0.02, -0.01, 0.05), Vec3(0.3, 0.1, -0.05)};
  const auto s = plane_scene(2, motion);
  const Pose at{Vec3(0.0, 0.01, 0.02), Vec3(0.1, 0.0, 0.0)};
  const auto C = index_pairs(s, at);
  const auto a = evaluate_loss(C, LossWeights{});
  const auto b = loss_at(at, s.source, C, LossWeights{});
  EXPECT_NEAR(a.total, b.total, 1e-12);
}

TEST(Loss, GradientMatchesFiniteDifferences) {
  const Pose motion{Vec3(0.03, -0.02, 0.06), Vec3(0.4, -0.2, 0.1)};
  const LossWeights w;
  const double h = 1e-7;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto s = plane_scene(seed, motion);
    const Pose at{Vec3(0.01, 0.0, 0.01 * seed), Vec3(0.05, 0.02, 0.0)};
    const auto C = index_pairs(s, at);
    const PoseVector p = at.to_vector();
    const PoseVector g = loss_gradient(p, s.source, C, w);
    PoseVector fd;
    for (int k = 0; k < 6; ++k) {
      PoseVector pp = p, pm = p;
      pp[k] += h;
      pm[k] -= h;
      fd[k] = (loss_at(Pose::from_vector(pp), s.source, C, w).total -
               loss_at(Pose::from_vector(pm), s.source, C, w).total) / (2 * h);
    }
    EXPECT_LT((g - fd).cwiseAbs().maxCoeff() / std::max(g.cwiseAbs().maxCoeff(), 1e-12), 1e-4);
  }
}

TEST(Loss, TranslationAlongWallNormal) {
  // single wall x = 4: translating along x gives a pure-x translation gradient
  PreprocessedCloud src;
  CorrespondenceSet C;
  for (int i = 0; i < 50; ++i) {
    const Vec3 p(4.0, 0.1 * i - 2.5, 0.05 * i);
    src.points.push_back(p);
    src.normals.push_back(Vec3(-1, 0, 0));
    auto c = tuple(p + Vec3(0.2, 0, 0), Vec3(-1, 0, 0), p, Vec3(-1, 0, 0));
    c.source_index = c.target_index = i;
    C.push_back(c);
  }
  PoseVector p = PoseVector::Zero();
  p[3] = 0.2;
  const PoseVector g = loss_gradient(p, src, C, LossWeights{});
  EXPECT_GT(std::abs(g[3]), 1.0);
  EXPECT_LT(std::abs(g[4]) + std::abs(g[5]), 1e-12);
}
