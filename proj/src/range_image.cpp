#include "liodom/range_image.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "liodom/errors.hpp"

namespace liodom {

namespace {

constexpr double kRadToDeg = 180.0 / std::numbers::pi;

struct Candidate {
  Vec3 value;
  Vec3 normal;
  bool normal_valid;
  int source;
};

}  // namespace

ProjectionConfig ProjectionConfig::kitti() {
  ProjectionConfig cfg;
  cfg.fov_up_deg = 3.0;
  return cfg;
}

void ProjectionConfig::validate() const {
  if (!(eta_w_deg > 0.0) || !(eta_h_deg > 0.0) || height <= 0 || width <= 0 ||
      !(fov_horizontal_deg > 0.0)) {
    throw ShapeError("projection config: sizes and densities must be positive");
  }
  const double expected = 2.0 * fov_horizontal_deg / eta_w_deg;
  if (std::abs(expected - width) > 1e-9) {
    throw ShapeError("projection config: width must equal 2*fov_horizontal/eta_w");
  }
}

std::size_t MapGrid::valid_count() const {
  return static_cast<std::size_t>(std::count(valid.begin(), valid.end(), 1));
}

bool pixel_of(const Vec3& p, const ProjectionConfig& cfg, PixelCoord& out) {
  const double d = p.norm();
  if (d == 0.0) return false;
  const double yaw = std::atan2(p.y(), p.x()) * kRadToDeg;
  const double pitch = std::asin(std::clamp(p.z() / d, -1.0, 1.0)) * kRadToDeg;
  const double wf = std::floor((cfg.fov_horizontal_deg - yaw) / cfg.eta_w_deg);
  const double hf = std::floor((cfg.fov_up_deg - pitch) / cfg.eta_h_deg);
  if (wf < 0.0 || wf >= cfg.width || hf < 0.0 || hf >= cfg.height) return false;
  out.w = static_cast<int>(wf);
  out.h = static_cast<int>(hf);
  return true;
}

namespace {

// Shared by project() and remap(): min-depth z-buffer over candidates.
template <class Source>
void splat(const ProjectionConfig& cfg, std::size_t count, Source&& get,
           VertexMap& V, NormalMap* N, ProjectionStats* stats) {
  std::vector<double> depth(V.values.size(), std::numeric_limits<double>::infinity());
  for (std::size_t i = 0; i < count; ++i) {
    const Candidate c = get(i);
    if (!c.value.allFinite()) {
      if (stats) ++stats->non_finite;
      continue;
    }
    const double d = c.value.norm();
    if (d == 0.0) {
      if (stats) ++stats->zero_depth;
      continue;
    }
    PixelCoord px;
    if (!pixel_of(c.value, cfg, px)) {
      if (stats) ++stats->out_of_window;
      continue;
    }
    const std::size_t k = V.index(px.h, px.w);
    if (d >= depth[k]) continue;
    depth[k] = d;
    V.values[k] = c.value;
    V.valid[k] = 1;
    V.source[k] = c.source;
    if (N) {
      N->values[k] = c.normal_valid ? c.normal : Vec3::Zero();
      N->valid[k] = c.normal_valid ? 1 : 0;
      N->source[k] = c.normal_valid ? c.source : -1;
    }
  }
}

}  // namespace

VertexMap project(const PointCloud& cloud, const ProjectionConfig& cfg,
                  ProjectionStats* stats) {
  cfg.validate();
  VertexMap V(cfg.height, cfg.width);
  splat(
      cfg, cloud.points.size(),
      [&](std::size_t i) {
        return Candidate{cloud.points[i], Vec3::Zero(), false, static_cast<int>(i)};
      },
      V, nullptr, stats);
  return V;
}

NormalMap compute_normal_map(const VertexMap& V) {
  NormalMap N(V.height, V.width);
  // up, right, down, left
  static constexpr int dh[4] = {-1, 0, 1, 0};
  static constexpr int dw[4] = {0, 1, 0, -1};
  for (int h = 0; h < V.height; ++h) {
    for (int w = 0; w < V.width; ++w) {
      if (!V.is_valid(h, w)) continue;
      const Vec3& vp = V.at(h, w);
      const double dp = vp.norm();
      Vec3 scaled[4];
      bool complete = true;
      for (int i = 0; i < 4 && complete; ++i) {
        const int hh = h + dh[i], ww = w + dw[i];
        if (hh < 0 || hh >= V.height || ww < 0 || ww >= V.width || !V.is_valid(hh, ww)) {
          complete = false;
          break;
        }
        const Vec3& vi = V.at(hh, ww);
        scaled[i] = std::exp(-0.5 * std::abs(vi.norm() - dp)) * (vi - vp);
      }
      if (!complete) continue;
      Vec3 n = Vec3::Zero();
      for (int i = 0; i < 4; ++i) n += scaled[i].cross(scaled[(i + 1) % 4]);
      const double len = n.norm();
      if (!(len > 1e-12)) continue;
      const std::size_t k = N.index(h, w);
      N.values[k] = n / len;
      N.valid[k] = 1;
      N.source[k] = static_cast<int>(k);
    }
  }
  return N;
}

RemappedMaps remap(const VertexMap& V, const NormalMap& N, const Pose& T,
                   const ProjectionConfig& cfg) {
  if (V.height != N.height || V.width != N.width || V.height != cfg.height ||
      V.width != cfg.width) {
    throw ShapeError("remap: vertex map, normal map and config disagree on shape");
  }
  cfg.validate();
  const Mat3 R = T.rotation();
  std::vector<std::size_t> pixels;
  pixels.reserve(V.values.size());
  for (std::size_t k = 0; k < V.values.size(); ++k) {
    if (V.valid[k]) pixels.push_back(k);
  }
  RemappedMaps out{VertexMap(V.height, V.width), NormalMap(V.height, V.width)};
  splat(
      cfg, pixels.size(),
      [&](std::size_t i) {
        const std::size_t k = pixels[i];
        return Candidate{R * V.values[k] + T.t, R * N.values[k], N.valid[k] != 0,
                         static_cast<int>(k)};
      },
      out.vertices, &out.normals, nullptr);
  return out;
}

}  // namespace liodom
