#include "liodom/preprocess.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

#include <Eigen/Eigenvalues>

#include "liodom/kdtree.hpp"

namespace liodom {

PlaneFitNormals estimate_normals_planefit(std::span<const Vec3> points, int k) {
  if (k < 3) throw std::invalid_argument("plane fit needs k >= 3");
  PlaneFitNormals out;
  out.normals.assign(points.size(), Vec3::Zero());
  out.valid.assign(points.size(), 0);
  if (points.size() < 3) return out;

  const KdIndex index(points);
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto nbrs = index.knn(points[i], static_cast<std::size_t>(k));
    Vec3 mean = Vec3::Zero();
    for (const auto& n : nbrs) mean += index.point(n.index);
    mean /= static_cast<double>(nbrs.size());
    Mat3 cov = Mat3::Zero();
    for (const auto& n : nbrs) {
      const Vec3 d = index.point(n.index) - mean;
      cov += d * d.transpose();
    }
    const Eigen::SelfAdjointEigenSolver<Mat3> eig(cov);
    const Vec3 ev = eig.eigenvalues();  // ascending
    // rank < 2: the two largest spreads must both be present
    if (!(ev(2) > 0.0) || ev(1) <= 1e-10 * ev(2)) continue;
    Vec3 n = eig.eigenvectors().col(0).normalized();
    if (n.dot(-points[i]) < 0.0) n = -n;
    out.normals[i] = n;
    out.valid[i] = 1;
  }
  return out;
}

GroundRemoval ransac_ground_removal(std::span<const Vec3> points,
                                    const RansacParams& params) {
  GroundRemoval out;
  const std::size_t n = points.size();
  auto keep_all = [&] {
    out.kept.resize(n);
    std::iota(out.kept.begin(), out.kept.end(), std::size_t{0});
    return out;
  };
  if (n < 3) return keep_all();

  std::mt19937_64 rng(params.seed);
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  std::size_t best_count = 0;
  Eigen::Vector4d best = Eigen::Vector4d::Zero();
  for (int it = 0; it < params.iterations; ++it) {
    const std::size_t a = pick(rng), b = pick(rng), c = pick(rng);
    if (a == b || b == c || a == c) continue;
    Vec3 normal = (points[b] - points[a]).cross(points[c] - points[a]);
    const double len = normal.norm();
    if (!(len > 1e-12)) continue;
    normal /= len;
    const double d = -normal.dot(points[a]);
    std::size_t count = 0;
    for (const auto& p : points) {
      if (std::abs(normal.dot(p) + d) <= params.distance_threshold) ++count;
    }
    if (count > best_count) {
      best_count = count;
      best << normal, d;
    }
  }
  out.plane = best;
  out.inliers = best_count;
  if (best_count == 0 ||
      static_cast<double>(best_count) < params.min_inlier_fraction * static_cast<double>(n)) {
    return keep_all();
  }
  out.removed = true;
  const Vec3 normal = best.head<3>();
  for (std::size_t i = 0; i < n; ++i) {
    if (std::abs(normal.dot(points[i]) + best(3)) > params.distance_threshold) {
      out.kept.push_back(i);
    }
  }
  return out;
}

namespace {

using VoxelKey = std::array<std::int64_t, 3>;

VoxelKey key_of(const Vec3& p, double side) {
  return {static_cast<std::int64_t>(std::floor(p.x() / side)),
          static_cast<std::int64_t>(std::floor(p.y() / side)),
          static_cast<std::int64_t>(std::floor(p.z() / side))};
}

// Point indices sorted by voxel key (stable, so ties keep input order).
std::vector<std::pair<VoxelKey, std::size_t>> sorted_keys(std::span<const Vec3> points,
                                                          double side) {
  std::vector<std::pair<VoxelKey, std::size_t>> keyed(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) keyed[i] = {key_of(points[i], side), i};
  std::stable_sort(keyed.begin(), keyed.end(),
                   [](const auto& a, const auto& b) { return a.first < b.first; });
  return keyed;
}

}  // namespace

std::size_t voxel_count(std::span<const Vec3> points, double side) {
  const auto keyed = sorted_keys(points, side);
  std::size_t count = 0;
  for (std::size_t i = 0; i < keyed.size(); ++i) {
    if (i == 0 || keyed[i].first != keyed[i - 1].first) ++count;
  }
  return count;
}

PreprocessedCloud voxel_downsample(std::span<const Vec3> points,
                                   std::span<const Vec3> normals, double side) {
  if (points.size() != normals.size()) {
    throw std::invalid_argument("voxel_downsample: points and normals differ in size");
  }
  if (!(side > 0.0)) throw std::invalid_argument("voxel_downsample: side must be > 0");
  const auto keyed = sorted_keys(points, side);
  PreprocessedCloud out;
  std::size_t i = 0;
  while (i < keyed.size()) {
    std::size_t j = i;
    Vec3 p = Vec3::Zero(), nsum = Vec3::Zero();
    while (j < keyed.size() && keyed[j].first == keyed[i].first) {
      p += points[keyed[j].second];
      nsum += normals[keyed[j].second];
      ++j;
    }
    const double len = nsum.norm();
    if (len > 1e-12) {
      out.points.push_back(p / static_cast<double>(j - i));
      out.normals.push_back(nsum / len);
    }
    i = j;
  }
  return out;
}

AdaptiveDownsample adaptive_voxel_downsample(std::span<const Vec3> points,
                                             std::span<const Vec3> normals,
                                             const VoxelParams& params) {
  if (points.size() != normals.size()) {
    throw std::invalid_argument("adaptive_voxel_downsample: size mismatch");
  }
  if (!(params.initial_side > 0.0) || !(params.step > 0.0)) {
    throw std::invalid_argument("adaptive_voxel_downsample: side and step must be > 0");
  }
  AdaptiveDownsample out;
  const std::size_t lo = params.target > params.tolerance ? params.target - params.tolerance : 0;
  const std::size_t hi = params.target + params.tolerance;

  if (points.size() < lo) {
    out.under_target = true;
    out.cloud.points.assign(points.begin(), points.end());
    for (const auto& n : normals) out.cloud.normals.push_back(n.normalized());
    return out;
  }

  double side = params.initial_side;
  double step = params.step;
  int last_dir = 0;
  bool bracketed = false;
  double best_side = side;
  std::size_t best_err = static_cast<std::size_t>(-1);
  for (;;) {
    const std::size_t count = voxel_count(points, side);
    const std::size_t err = count > params.target ? count - params.target : params.target - count;
    if (err < best_err) {
      best_err = err;
      best_side = side;
    }
    if (count >= lo && count <= hi) break;
    if (out.passes >= params.max_passes) {
      out.budget_exhausted = true;
      side = best_side;
      break;
    }
    const int dir = count > hi ? 1 : -1;
    if (last_dir != 0 && dir != last_dir) {
      bracketed = true;
      step *= 0.5;
    } else if (last_dir != 0 && !bracketed) {
      // far from target: widen the stride until the target is bracketed
      step *= 2.0;
    }
    last_dir = dir;
    double next = side + dir * step;
    while (!(next > 0.0)) {
      step *= 0.5;
      next = side + dir * step;
    }
    side = next;
    ++out.passes;
  }
  out.side = side;
  out.cloud = voxel_downsample(points, normals, side);
  return out;
}

PreprocessedCloud preprocess_scan(const PointCloud& scan, const PreprocessParams& params,
                                  PreprocessReport* report) {
  PreprocessReport rep;
  rep.input_points = scan.points.size();

  std::vector<Vec3> pts, nrm;
  pts.reserve(scan.points.size());
  nrm.reserve(scan.points.size());
  if (scan.points.size() > static_cast<std::size_t>(params.planefit_k)) {
    const auto fit = estimate_normals_planefit(scan.points, params.planefit_k);
    for (std::size_t i = 0; i < scan.points.size(); ++i) {
      if (!fit.valid[i]) {
        ++rep.invalid_normals;
        continue;
      }
      pts.push_back(scan.points[i]);
      nrm.push_back(fit.normals[i]);
    }
  } else {
    rep.invalid_normals = scan.points.size();
  }

  const auto ground = ransac_ground_removal(pts, params.ransac);
  rep.ground_points = pts.size() - ground.kept.size();
  std::vector<Vec3> kept_pts, kept_nrm;
  kept_pts.reserve(ground.kept.size());
  kept_nrm.reserve(ground.kept.size());
  for (const std::size_t i : ground.kept) {
    kept_pts.push_back(pts[i]);
    kept_nrm.push_back(nrm[i]);
  }

  auto ds = adaptive_voxel_downsample(kept_pts, kept_nrm, params.voxel);
  rep.voxel_side = ds.side;
  rep.voxel_passes = ds.passes;
  rep.under_target = ds.under_target;
  rep.budget_exhausted = ds.budget_exhausted;
  if (report) *report = rep;
  return std::move(ds.cloud);
}

}  // namespace liodom
