#pragma once

#include <cstdint>
#include <vector>

#include "liodom/pipeline.hpp"
#include "liodom/synth.hpp"
#include "liodom/training.hpp"

namespace liodom::harness {

/// 8 x 32 window (45 x 4 degree pixels) for desk-scale maps.
ProjectionConfig tiny_projection(int height = 8, int width = 32);

struct SyntheticPairs {
  std::vector<FramePair> pairs;
  std::vector<Pose> truth;  // current -> last
};

struct PairSettings {
  int frames = 21;
  std::uint64_t seed = 1;
  double heading_amplitude = 0.25;
  double heading_jitter = 0.1;
  int imu_window = 15;
  std::size_t voxel_target = 512;
};

SyntheticPairs synthetic_pairs(const PairSettings& s, const ProjectionConfig& proj);

/// Desk-scale unsupervised training run on one synthetic sequence, evaluated
/// on another.
struct SmokeSettings {
  ImuMode imu_mode = ImuMode::InitialPose;
  int epochs = 100;
  std::uint64_t model_seed = 5;
  PairSettings train{51, 11};
  PairSettings held_out{21, 23};
};

struct SmokeResult {
  std::vector<double> epoch_loss;
  double train_error = 0.0;
  double train_identity_error = 0.0;
  double held_error = 0.0;
  double held_identity_error = 0.0;
  double seconds = 0.0;
};

SmokeResult run_smoke(const SmokeSettings& s);

/// Mean pose_error of the model (inference mode) over the pairs.
double mean_pose_error(OdometryModel& model, const SyntheticPairs& data,
                       const ProjectionConfig& proj);

/// Point cloud with plane-fit normals, no ground removal or downsampling.
PreprocessedCloud with_normals(const PointCloud& scan, int k = 10);

/// Random room, random motion within 0.5 m / 5 degrees, registration from
/// identity.
struct RegistrationTrial {
  Pose truth;
  Pose estimate;
  double translation_error = 0.0;  // m
  double rotation_error_deg = 0.0;
  double seconds = 0.0;
};

RegistrationTrial registration_trial(std::uint64_t seed, double noise_sigma);

}  // namespace liodom::harness
