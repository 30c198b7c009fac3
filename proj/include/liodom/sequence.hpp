#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "liodom/dataset_io.hpp"
#include "liodom/pipeline.hpp"
#include "liodom/registration.hpp"

namespace liodom {

/// A KITTI-style sequence directory:
///   velodyne/*.bin   scans, lexicographic order
///   times.txt        optional; frame_period spacing otherwise
///   calib.txt        optional; "Tr" maps lidar to camera coordinates
///   oxts/            optional IMU records (see read_oxts)
///   poses.txt        optional ground truth in the camera frame
struct SequenceData {
  fs::path dir;
  std::vector<fs::path> scan_files;
  std::vector<PointCloud> scans;
  std::vector<double> times;
  std::vector<ImuRecord> imu;              // empty without oxts/
  std::optional<Trajectory> ground_truth;  // lidar frame, rebased to the first loaded frame
  Mat4 calibration = Mat4::Identity();     // Tr
};

struct LoadOptions {
  std::size_t first = 0;
  std::size_t count = 0;  // 0 loads all remaining frames
  double frame_period = 0.1;
};

SequenceData load_sequence(const fs::path& dir, const LoadOptions& opts = {});

/// 16 hex digits identifying a scan's contents together with the
/// preprocessing parameters.
std::string preprocess_key(const PointCloud& scan, const PreprocessParams& params);

/// Cache file "<key>.dpnp": "LIODDPNP", u64 LE count, then count x
/// (point xyz, normal xyz) float64 LE.
void write_preprocessed(const fs::path& path, const PreprocessedCloud& cloud);
PreprocessedCloud read_preprocessed(const fs::path& path);

/// preprocess_scan with an optional on-disk cache; files are written to a
/// temporary name and renamed into place. `hit` reports whether the cache
/// served the result.
PreprocessedCloud preprocess_cached(const PointCloud& scan, const PreprocessParams& params,
                                    const std::optional<fs::path>& cache_dir,
                                    bool* hit = nullptr);

/// Cache directory from the LIODOM_CACHE_DIR environment variable.
std::optional<fs::path> cache_dir_from_env();

std::vector<std::shared_ptr<const Frame>> build_frames(const std::vector<PointCloud>& scans,
                                                       const std::vector<double>& times,
                                                       const ProjectionConfig& proj,
                                                       const PreprocessParams& params,
                                                       const std::optional<fs::path>& cache_dir);

/// Consecutive pairs. IMU windows of S rows are attached when `with_imu`;
/// that requires IMU records (ConfigError otherwise).
std::vector<FramePair> make_pairs(const std::vector<std::shared_ptr<const Frame>>& frames,
                                  const std::vector<ImuRecord>& imu, int S, bool with_imu);

enum class RunMode {
  Learned,    // network estimate
  Classical,  // registration from identity
  Hybrid,     // registration initialized with the network estimate
};

std::string to_string(RunMode m);
RunMode parse_run_mode(std::string_view s);

struct RunOptions {
  RegistrationOptions registration;
  ProjectionConfig projection;
};

struct PairReport {
  std::size_t index = 0;
  Pose relative;               // pose used for chaining
  std::optional<Pose> network;  // learned / hybrid
  bool registration_failed = false;
  std::string message;
  double final_loss = 0.0;  // registration loss (classical / hybrid)
  std::size_t matches = 0;
};

struct SequenceResult {
  Trajectory poses;  // poses[0] = identity
  std::vector<PairReport> pairs;
  std::size_t failures = 0;
};

/// Estimates every pair and chains the relative poses. A failed registration
/// contributes the identity and is flagged. `model` is required for the
/// learned and hybrid modes.
SequenceResult run_sequence(const std::vector<FramePair>& pairs, RunMode mode,
                            OdometryModel* model, const RunOptions& opts);

std::string format_pair_reports_csv(const SequenceResult& result);

}  // namespace liodom
