#include "liodom/evaluation.hpp"

#include <cmath>
#include <cstdio>
#include <numbers>
#include <stdexcept>

namespace liodom {

namespace {

// Angle of Ra^T Rb. The chord form |Rb - Ra|_F = 2 sqrt(2) sin(angle / 2) is
// exact at zero and well conditioned for small angles.
double angle_between(const Mat3& Ra, const Mat3& Rb) {
  const double chord = (Rb - Ra).norm() / (2.0 * std::sqrt(2.0));
  if (chord < std::sqrt(0.5)) return 2.0 * std::asin(chord);
  return rotation_angle(Ra.transpose() * Rb);
}

Mat4 rigid_inverse(const Mat4& T) {
  Mat4 inv = Mat4::Identity();
  inv.topLeftCorner<3, 3>() = T.topLeftCorner<3, 3>().transpose();
  inv.topRightCorner<3, 1>() = -inv.topLeftCorner<3, 3>() * T.topRightCorner<3, 1>();
  return inv;
}

}  // namespace

Trajectory accumulate(const std::vector<Mat4>& relatives) {
  Trajectory out;
  out.reserve(relatives.size() + 1);
  out.push_back(Mat4::Identity());
  for (const auto& r : relatives) out.push_back(out.back() * r);
  return out;
}

Trajectory accumulate(const std::vector<Pose>& relatives) {
  std::vector<Mat4> m;
  m.reserve(relatives.size());
  for (const auto& p : relatives) m.push_back(p.matrix());
  return accumulate(m);
}

std::vector<Mat4> relative_motions(const Trajectory& absolute) {
  std::vector<Mat4> out;
  for (std::size_t i = 0; i + 1 < absolute.size(); ++i) {
    out.push_back(rigid_inverse(absolute[i]) * absolute[i + 1]);
  }
  return out;
}

SegmentErrorReport kitti_relative_errors(const Trajectory& estimated,
                                         const Trajectory& ground_truth,
                                         const EvalOptions& opts) {
  if (estimated.size() != ground_truth.size()) {
    throw std::invalid_argument("kitti_relative_errors: trajectories differ in length");
  }
  if (opts.stride < 1) throw std::invalid_argument("kitti_relative_errors: stride must be >= 1");
  const std::size_t n = ground_truth.size();
  std::vector<double> dist(n, 0.0);
  for (std::size_t i = 1; i < n; ++i) {
    dist[i] = dist[i - 1] + (ground_truth[i].topRightCorner<3, 1>() -
                             ground_truth[i - 1].topRightCorner<3, 1>())
                                .norm();
  }

  SegmentErrorReport report;
  for (const double len : opts.lengths) {
    LengthErrors le;
    le.length = len;
    for (std::size_t first = 0; first < n; first += static_cast<std::size_t>(opts.stride)) {
      std::size_t last = first;
      while (last < n && dist[last] - dist[first] < len) ++last;
      if (last >= n) continue;
      const Mat4 gt_delta = rigid_inverse(ground_truth[first]) * ground_truth[last];
      const Mat4 est_delta = rigid_inverse(estimated[first]) * estimated[last];
      // E = gt_delta^-1 * est_delta, with the translation formed from the
      // difference so that equal inputs give exactly zero
      const Mat3 Rg_t = gt_delta.topLeftCorner<3, 3>().transpose();
      const Vec3 dt = est_delta.topRightCorner<3, 1>() - gt_delta.topRightCorner<3, 1>();
      le.translation += (Rg_t * dt).norm() / len;
      le.rotation += angle_between(gt_delta.topLeftCorner<3, 3>(), est_delta.topLeftCorner<3, 3>()) / len;
      ++le.segments;
    }
    if (le.segments > 0) {
      le.translation /= static_cast<double>(le.segments);
      le.rotation /= static_cast<double>(le.segments);
    }
    report.per_length.push_back(le);
  }

  std::size_t used = 0;
  for (const auto& le : report.per_length) {
    if (le.segments == 0) continue;
    report.t_rel += le.translation;
    report.r_rel += le.rotation;
    report.total_segments += le.segments;
    ++used;
  }
  if (used == 0) {
    report.too_short = true;
    return report;
  }
  report.t_rel = 100.0 * report.t_rel / static_cast<double>(used);
  report.r_rel = 100.0 * (180.0 / std::numbers::pi) * report.r_rel / static_cast<double>(used);
  return report;
}

std::string format_report_table(const SegmentErrorReport& report) {
  std::string out = "length_m  segments  t_err_%   r_err_deg/100m\n";
  char buf[128];
  for (const auto& le : report.per_length) {
    std::snprintf(buf, sizeof(buf), "%8.0f  %8zu  %8.4f  %8.4f\n", le.length, le.segments,
                  100.0 * le.translation, 100.0 * le.rotation * 180.0 / std::numbers::pi);
    out += buf;
  }
  std::snprintf(buf, sizeof(buf), "t_rel %.2f %%  r_rel %.2f deg/100m  (%zu segments)%s\n",
                report.t_rel, report.r_rel, report.total_segments,
                report.too_short ? "  [trajectory shorter than the shortest segment]" : "");
  out += buf;
  return out;
}

std::string format_report_csv(const SegmentErrorReport& report) {
  std::string out = "length,segments,t_err_percent,r_err_deg_per_100m\n";
  char buf[128];
  for (const auto& le : report.per_length) {
    std::snprintf(buf, sizeof(buf), "%.0f,%zu,%.9g,%.9g\n", le.length, le.segments,
                  100.0 * le.translation, 100.0 * le.rotation * 180.0 / std::numbers::pi);
    out += buf;
  }
  std::snprintf(buf, sizeof(buf), "all,%zu,%.9g,%.9g\n", report.total_segments, report.t_rel,
                report.r_rel);
  out += buf;
  return out;
}

}  // namespace liodom
