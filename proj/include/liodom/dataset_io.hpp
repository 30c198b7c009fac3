#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "liodom/geometry.hpp"
#include "liodom/point_cloud.hpp"

namespace liodom {

namespace fs = std::filesystem;

/// KITTI velodyne scan: x, y, z, reflectance per point, as stored on disk.
struct ScanRecord {
  std::vector<Eigen::Vector4f> points;

  PointCloud to_cloud() const;
  static ScanRecord from_cloud(const PointCloud& cloud);
};

/// Little-endian float32 x 4 per point. Throws FormatError when the byte
/// length is not a multiple of 16 or a value is not finite, IoError when the
/// file cannot be read.
ScanRecord read_velodyne_bin(const fs::path& path);
void write_velodyne_bin(const fs::path& path, const ScanRecord& scan);

/// One inertial sample: linear acceleration (m/s^2) and angular velocity
/// (rad/s), timestamp in seconds.
struct ImuRecord {
  double timestamp = 0.0;
  Vec3 accel = Vec3::Zero();
  Vec3 gyro = Vec3::Zero();
};

/// Parses one OXTS line: acceleration from fields 11-13, angular velocity from
/// fields 17-19 (0-indexed). Lines with fewer than 23 fields are rejected.
ImuRecord parse_oxts_line(std::string_view line, const std::string& file, std::size_t line_no);

/// "YYYY-MM-DD HH:MM:SS.fffffffff" to seconds since midnight.
double parse_kitti_timestamp(std::string_view text);
std::string format_kitti_timestamp(double seconds_of_day);

/// Reads a KITTI raw OXTS directory: `data/*.txt` (or `*.txt` directly in
/// `dir`) in lexicographic order, one record per non-empty line. Timestamps come
/// from `timestamps.txt` when present, re-based so the first record is at 0;
/// otherwise records are spaced `fallback_period` seconds apart.
std::vector<ImuRecord> read_oxts(const fs::path& dir, double fallback_period = 0.01);

/// Writes `data/%010d.txt` (30 fields, unused ones zero) and `timestamps.txt`.
void write_oxts(const fs::path& dir, const std::vector<ImuRecord>& records);

/// S x 6 window: acceleration in columns 0-2, angular velocity in 3-5.
struct ImuWindow {
  Eigen::Matrix<double, Eigen::Dynamic, 6, Eigen::RowMajor> rows;
  std::vector<double> timestamps;
};

/// Records with timestamp in (t0, t1], resampled to exactly S rows: uniform
/// index subsampling (floor(j * n / S)) when there are more, linear
/// interpolation with preserved endpoints when there are fewer. Throws
/// FormatError when the interval holds no record.
ImuWindow window_imu(const std::vector<ImuRecord>& records, double t0, double t1, int S);

/// One window per consecutive pair of scan timestamps.
std::vector<ImuWindow> window_imu(const std::vector<ImuRecord>& records,
                                  const std::vector<double>& scan_times, int S);

using Trajectory = std::vector<Mat4>;

/// KITTI pose file: 12 reals per line, row-major 3x4.
Trajectory read_poses(const fs::path& path);
void write_poses(const fs::path& path, const Trajectory& poses);
std::string format_pose_line(const Mat4& pose);

/// KITTI calib file: lines "key: 12 reals", each a row-major 3x4 matrix.
std::map<std::string, Mat4> read_calib(const fs::path& path);

/// T_cam = Tr * T_lidar * Tr^-1 for every pose.
Trajectory lidar_to_camera(const Trajectory& lidar_poses, const Mat4& Tr);
Trajectory camera_to_lidar(const Trajectory& camera_poses, const Mat4& Tr);

/// One real per line (seconds).
std::vector<double> read_times(const fs::path& path);
void write_times(const fs::path& path, const std::vector<double>& times);

}  // namespace liodom
