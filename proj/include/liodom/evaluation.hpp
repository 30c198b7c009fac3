#pragma once

#include <string>
#include <vector>

#include "liodom/dataset_io.hpp"
#include "liodom/geometry.hpp"

namespace liodom {

/// absolute[0] = identity, absolute[i] = absolute[i-1] * relative[i-1].
Trajectory accumulate(const std::vector<Pose>& relatives);
Trajectory accumulate(const std::vector<Mat4>& relatives);

/// relative[i] = absolute[i]^-1 * absolute[i+1].
std::vector<Mat4> relative_motions(const Trajectory& absolute);

struct EvalOptions {
  std::vector<double> lengths = {100, 200, 300, 400, 500, 600, 700, 800};
  int stride = 10;  // start-frame step
};

struct LengthErrors {
  double length = 0.0;
  std::size_t segments = 0;
  double translation = 0.0;  // mean |t_E| / L (fraction)
  double rotation = 0.0;     // mean angle(R_E) / L (rad/m)
};

struct SegmentErrorReport {
  std::vector<LengthErrors> per_length;
  double t_rel = 0.0;  // percent
  double r_rel = 0.0;  // degrees per 100 m
  std::size_t total_segments = 0;
  bool too_short = false;  // no segment of any length fits the trajectory
};

/// KITTI odometry segment errors. For each start frame (every `stride`) and
/// length L, the end is the first frame whose ground-truth path length from
/// the start is >= L. E = (gt_s^-1 gt_e)^-1 (est_s^-1 est_e). Errors are
/// averaged per length, then across the lengths that have segments.
/// Throws std::invalid_argument when the trajectories differ in length.
SegmentErrorReport kitti_relative_errors(const Trajectory& estimated,
                                         const Trajectory& ground_truth,
                                         const EvalOptions& opts = {});

std::string format_report_table(const SegmentErrorReport& report);
std::string format_report_csv(const SegmentErrorReport& report);

}  // namespace liodom
