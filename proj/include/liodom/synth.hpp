#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "liodom/dataset_io.hpp"
#include "liodom/point_cloud.hpp"
#include "liodom/range_image.hpp"

namespace liodom {

/// Rectangle centered at `center` spanning `extent` (width, height) along two
/// in-plane axes derived from `normal`.
struct PlaneSpec {
  Vec3 center = Vec3::Zero();
  Vec3 normal = Vec3::UnitZ();
  Eigen::Vector2d extent = Eigen::Vector2d(10.0, 10.0);
};

/// Axis-aligned box; all six faces are sampled.
struct BoxSpec {
  Vec3 min = Vec3::Zero();
  Vec3 max = Vec3::Ones();
};

struct SceneSpec {
  std::vector<PlaneSpec> planes;
  std::vector<BoxSpec> boxes;
  double density = 20.0;     // points per square meter
  double noise_sigma = 0.0;  // isotropic Gaussian, meters
  std::uint64_t seed = 1;
};

/// Scene cloud with the index of the generating surface per point (planes
/// first, then six faces per box).
struct LabeledCloud {
  PointCloud cloud;
  std::vector<int> surface;
};

LabeledCloud sample_scene(const SceneSpec& spec);

/// In-plane axes (u, v) used for a plane with the given normal.
std::pair<Vec3, Vec3> plane_axes(const Vec3& normal);

struct ScanOptions {
  std::optional<ProjectionConfig> fov;  // crop to the projection window
  double max_range = 0.0;               // 0 disables
  double noise_sigma = 0.0;             // per-scan isotropic noise
  std::uint64_t seed = 0;
};

/// Scene points expressed in the frame of a sensor at world pose
/// `sensor_pose` (p_sensor = R^T (p - t)), optionally cropped and perturbed.
PointCloud scan_from_pose(const PointCloud& scene, const Pose& sensor_pose,
                          const ScanOptions& opts = {});

/// Gravity magnitude; the accelerometer reports specific force, so a static
/// level sensor reads (0, 0, +kGravity).
inline constexpr double kGravity = 9.81;

struct TimedPose {
  double time = 0.0;
  Pose pose;  // sensor in world
};

/// IMU stream sampled at `rate` Hz over the trajectory's time span. Positions
/// are interpolated with Catmull-Rom splines and rotations with slerp; angular
/// velocity comes from consecutive rotation deltas (body frame) and specific
/// force from second differences of position rotated into the body frame plus
/// gravity. Throws std::invalid_argument for fewer than 3 poses or
/// non-increasing timestamps.
std::vector<ImuRecord> synthesize_imu_stream(const std::vector<TimedPose>& trajectory,
                                             double rate);

/// synthesize_imu_stream followed by window_imu over the trajectory's
/// timestamps.
std::vector<ImuWindow> synthesize_imu(const std::vector<TimedPose>& trajectory, int S,
                                      double rate);

/// Closed room: floor, ceiling, four walls and random boxes. The sensor
/// origin lies inside, away from the boxes.
SceneSpec room_scene(std::uint64_t seed, double density = 20.0);

/// Corridor along +x with pillars on both walls, a ceiling and scattered boxes.
SceneSpec corridor_scene(double length, std::uint64_t seed, double density = 12.0);

struct SequenceSpec {
  int frames = 21;
  double frame_period = 0.1;   // seconds between scans
  double imu_rate = 100.0;     // Hz
  double speed = 4.0;          // m/s mean forward speed
  double speed_variation = 0.5;
  double heading_amplitude = 0.08;  // rad
  double heading_jitter = 0.05;     // rad, random per-sequence harmonics
  double max_range = 25.0;
  double scan_noise = 0.0;
  std::optional<ProjectionConfig> fov;
  double scene_density = 12.0;
  std::uint64_t seed = 1;
};

/// Synthetic scans along a smooth trajectory through a corridor, with
/// ground-truth sensor poses and an IMU stream.
struct SyntheticSequence {
  std::vector<double> times;
  Trajectory poses;  // sensor in world; poses[0] is identity
  std::vector<PointCloud> scans;
  std::vector<ImuRecord> imu;
  LabeledCloud scene;
};

SyntheticSequence make_sequence(const SequenceSpec& spec);

/// Writes velodyne/*.bin, times.txt, poses.txt, calib.txt (identity Tr) and
/// oxts/ in the KITTI layouts.
void export_sequence(const SyntheticSequence& seq, const fs::path& dir);

}  // namespace liodom
