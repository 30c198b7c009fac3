#include "support.hpp"

#include <chrono>
#include <cmath>
#include <random>

#include "liodom/preprocess.hpp"
#include "liodom/registration.hpp"

namespace liodom::harness {

ProjectionConfig tiny_projection(int height, int width) {
  ProjectionConfig p;
  p.height = height;
  p.width = width;
  p.eta_w_deg = 360.0 / width;
  p.eta_h_deg = 32.0 / height;
  p.fov_up_deg = 15.0;
  return p;
}

SyntheticPairs synthetic_pairs(const PairSettings& s, const ProjectionConfig& proj) {
  SequenceSpec spec;
  spec.frames = s.frames;
  spec.seed = s.seed;
  spec.heading_amplitude = s.heading_amplitude;
  spec.heading_jitter = s.heading_jitter;
  spec.fov = proj;
  const auto seq = make_sequence(spec);

  PreprocessParams pp;
  pp.voxel.target = s.voxel_target;
  pp.voxel.tolerance = 100;
  std::vector<std::shared_ptr<const Frame>> frames;
  for (std::size_t k = 0; k < seq.scans.size(); ++k) {
    frames.push_back(std::make_shared<const Frame>(make_frame(seq.scans[k], proj, pp, seq.times[k])));
  }
  const auto windows = window_imu(seq.imu, seq.times, s.imu_window);
  SyntheticPairs out;
  for (std::size_t k = 0; k + 1 < frames.size(); ++k) {
    out.pairs.push_back({frames[k], frames[k + 1], windows[k]});
    out.truth.push_back(Pose::from_matrix(seq.poses[k].inverse() * seq.poses[k + 1]));
  }
  return out;
}

double mean_pose_error(OdometryModel& model, const SyntheticPairs& data,
                       const ProjectionConfig& proj) {
  double sum = 0.0;
  for (std::size_t i = 0; i < data.pairs.size(); ++i) {
    sum += pose_error(model.estimate(data.pairs[i], proj, false).pose, data.truth[i]);
  }
  return sum / static_cast<double>(data.pairs.size());
}

namespace {

double identity_error(const SyntheticPairs& data) {
  double sum = 0.0;
  for (const auto& t : data.truth) sum += pose_error(Pose::identity(), t);
  return sum / static_cast<double>(data.truth.size());
}

}  // namespace

SmokeResult run_smoke(const SmokeSettings& s) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto proj = tiny_projection();
  const auto train = synthetic_pairs(s.train, proj);
  const auto held = synthetic_pairs(s.held_out, proj);

  ModelConfig mc = ModelConfig::desk();
  mc.imu_mode = s.imu_mode;
  OdometryModel model(mc, s.model_seed);
  TrainingConfig tc;
  tc.epochs = s.epochs;
  tc.batch_size = 5;
  tc.adam.learning_rate = 3e-3;
  Trainer trainer(model, tc, proj);

  SmokeResult r;
  for (int e = 0; e < s.epochs; ++e) r.epoch_loss.push_back(trainer.train_epoch(train.pairs).mean_loss);
  r.train_error = mean_pose_error(model, train, proj);
  r.train_identity_error = identity_error(train);
  r.held_error = mean_pose_error(model, held, proj);
  r.held_identity_error = identity_error(held);
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

PreprocessedCloud with_normals(const PointCloud& scan, int k) {
  const auto fit = estimate_normals_planefit(scan.points, k);
  PreprocessedCloud out;
  for (std::size_t i = 0; i < scan.points.size(); ++i) {
    if (!fit.valid[i]) continue;
    out.points.push_back(scan.points[i]);
    out.normals.push_back(fit.normals[i]);
  }
  return out;
}

RegistrationTrial registration_trial(std::uint64_t seed, double noise_sigma) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  auto direction = [&] {
    Vec3 d(gauss(rng), gauss(rng), gauss(rng));
    return Vec3(d.normalized());
  };
  const double kDeg = M_PI / 180.0;
  const Vec3 t = 0.5 * unit(rng) * direction();
  const Mat3 R = Eigen::AngleAxisd(5.0 * kDeg * unit(rng), direction()).toRotationMatrix();

  RegistrationTrial trial;
  trial.truth = Pose::from_rotation(R, t);
  const auto scene = sample_scene(room_scene(seed, 20.0));
  ScanOptions a, b;
  a.noise_sigma = b.noise_sigma = noise_sigma;
  a.seed = seed * 2 + 1;
  b.seed = seed * 2 + 2;
  // target: sensor at the origin; source: sensor at `truth`, so target = truth * source
  const auto target = with_normals(scan_from_pose(scene.cloud, Pose::identity(), a));
  const auto source = with_normals(scan_from_pose(scene.cloud, trial.truth, b));

  const auto t0 = std::chrono::steady_clock::now();
  trial.estimate = register_clouds(source, target, Pose::identity()).pose;
  trial.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  trial.translation_error = (trial.estimate.t - trial.truth.t).norm();
  trial.rotation_error_deg =
      rotation_angle(trial.estimate.rotation().transpose() * trial.truth.rotation()) / kDeg;
  return trial;
}

}  // namespace liodom::harness
