#include "liodom/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <random>
#include <stdexcept>

#include "liodom/errors.hpp"

namespace liodom {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

void sample_rect(const Vec3& center, const Vec3& u, const Vec3& v, double wu, double hv,
                 double density, double sigma, int label, std::mt19937_64& rng,
                 LabeledCloud& out) {
  const auto count = static_cast<std::size_t>(std::llround(wu * hv * density));
  std::uniform_real_distribution<double> unit(-0.5, 0.5);
  std::normal_distribution<double> noise(0.0, 1.0);
  for (std::size_t i = 0; i < count; ++i) {
    Vec3 p = center + unit(rng) * wu * u + unit(rng) * hv * v;
    if (sigma > 0.0) p += sigma * Vec3(noise(rng), noise(rng), noise(rng));
    out.cloud.points.push_back(p);
    out.surface.push_back(label);
  }
}

Eigen::Quaterniond quat(const Pose& p) { return Eigen::Quaterniond(p.rotation()); }

// Axis-angle vector of a rotation matrix.
Vec3 rotation_log(const Mat3& R) {
  const Eigen::AngleAxisd aa(R);
  return aa.angle() * aa.axis();
}

}  // namespace

std::pair<Vec3, Vec3> plane_axes(const Vec3& normal) {
  const Vec3 n = normal.normalized();
  const Vec3 ref = std::abs(n.z()) > 0.9 ? Vec3::UnitX() : Vec3::UnitZ();
  const Vec3 u = n.cross(ref).normalized();
  return {u, n.cross(u)};
}

LabeledCloud sample_scene(const SceneSpec& spec) {
  if (!(spec.density > 0.0)) throw std::invalid_argument("sample_scene: density must be > 0");
  if (spec.planes.empty() && spec.boxes.empty()) {
    throw std::invalid_argument("sample_scene: empty geometry");
  }
  std::mt19937_64 rng(spec.seed);
  LabeledCloud out;
  int label = 0;
  for (const auto& plane : spec.planes) {
    const auto [u, v] = plane_axes(plane.normal);
    sample_rect(plane.center, u, v, plane.extent.x(), plane.extent.y(), spec.density,
                spec.noise_sigma, label++, rng, out);
  }
  for (const auto& box : spec.boxes) {
    const Vec3 c = 0.5 * (box.min + box.max);
    const Vec3 s = box.max - box.min;
    for (int axis = 0; axis < 3; ++axis) {
      const int a1 = (axis + 1) % 3, a2 = (axis + 2) % 3;
      for (const double side : {-0.5, 0.5}) {
        Vec3 fc = c;
        fc[axis] += side * s[axis];
        sample_rect(fc, Vec3::Unit(a1), Vec3::Unit(a2), s[a1], s[a2], spec.density,
                    spec.noise_sigma, label++, rng, out);
      }
    }
  }
  return out;
}

PointCloud scan_from_pose(const PointCloud& scene, const Pose& sensor_pose,
                          const ScanOptions& opts) {
  const Mat3 Rt = sensor_pose.rotation().transpose();
  std::mt19937_64 rng(opts.seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  PointCloud out;
  out.points.reserve(scene.points.size());
  for (const auto& pw : scene.points) {
    Vec3 p = Rt * (pw - sensor_pose.t);
    if (opts.max_range > 0.0 && p.norm() > opts.max_range) continue;
    if (opts.noise_sigma > 0.0) p += opts.noise_sigma * Vec3(noise(rng), noise(rng), noise(rng));
    if (opts.fov) {
      PixelCoord px;
      if (!pixel_of(p, *opts.fov, px)) continue;
    }
    out.points.push_back(p);
  }
  return out;
}

std::vector<ImuRecord> synthesize_imu_stream(const std::vector<TimedPose>& trajectory,
                                             double rate) {
  if (trajectory.size() < 3) throw std::invalid_argument("synthesize_imu: need >= 3 poses");
  for (std::size_t i = 1; i < trajectory.size(); ++i) {
    if (!(trajectory[i].time > trajectory[i - 1].time)) {
      throw std::invalid_argument("synthesize_imu: timestamps must increase");
    }
  }
  if (!(rate > 0.0)) throw std::invalid_argument("synthesize_imu: rate must be > 0");

  const std::size_t n = trajectory.size();
  auto position = [&](long k) -> Vec3 {
    if (k < 0) return 2.0 * trajectory[0].pose.t - trajectory[1].pose.t;
    if (k >= static_cast<long>(n)) return 2.0 * trajectory[n - 1].pose.t - trajectory[n - 2].pose.t;
    return trajectory[static_cast<std::size_t>(k)].pose.t;
  };

  const double t0 = trajectory.front().time;
  const double t1 = trajectory.back().time;
  const double dt = 1.0 / rate;
  const auto samples = static_cast<std::size_t>(std::floor((t1 - t0) * rate + 1e-9)) + 1;

  std::vector<Vec3> pos(samples);
  std::vector<Mat3> rot(samples);
  std::vector<double> times(samples);
  std::size_t seg = 0;
  for (std::size_t i = 0; i < samples; ++i) {
    const double t = t0 + static_cast<double>(i) * dt;
    while (seg + 2 < n && t > trajectory[seg + 1].time) ++seg;
    const double ta = trajectory[seg].time, tb = trajectory[seg + 1].time;
    const double s = std::clamp((t - ta) / (tb - ta), 0.0, 1.0);
    const long k = static_cast<long>(seg);
    const Vec3 p0 = position(k - 1), p1 = position(k), p2 = position(k + 1), p3 = position(k + 2);
    const double s2 = s * s, s3 = s2 * s;
    pos[i] = 0.5 * ((2.0 * p1) + (-p0 + p2) * s + (2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3) * s2 +
                    (-p0 + 3.0 * p1 - 3.0 * p2 + p3) * s3);
    rot[i] = quat(trajectory[seg].pose).slerp(s, quat(trajectory[seg + 1].pose)).toRotationMatrix();
    times[i] = t;
  }

  const Vec3 gravity_up(0.0, 0.0, kGravity);
  std::vector<ImuRecord> out(samples);
  for (std::size_t i = 0; i < samples; ++i) {
    const std::size_t a = i == 0 ? 0 : i - 1;
    const std::size_t b = std::min(i + 1, samples - 1);
    Vec3 acc = Vec3::Zero();
    if (samples >= 3) {
      const std::size_t c = std::clamp<std::size_t>(i, 1, samples - 2);
      acc = (pos[c + 1] - 2.0 * pos[c] + pos[c - 1]) / (dt * dt);
    }
    const std::size_t g0 = i + 1 < samples ? i : a;
    const std::size_t g1 = i + 1 < samples ? b : i;
    out[i].timestamp = times[i];
    out[i].gyro = rotation_log(rot[g0].transpose() * rot[g1]) / dt;
    out[i].accel = rot[i].transpose() * (acc + gravity_up);
  }
  return out;
}

std::vector<ImuWindow> synthesize_imu(const std::vector<TimedPose>& trajectory, int S,
                                      double rate) {
  const auto stream = synthesize_imu_stream(trajectory, rate);
  std::vector<double> times;
  times.reserve(trajectory.size());
  for (const auto& tp : trajectory) times.push_back(tp.time);
  return window_imu(stream, times, S);
}

SceneSpec room_scene(std::uint64_t seed, double density) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> half(4.0, 7.0);
  std::uniform_real_distribution<double> floor_depth(1.2, 2.0);
  std::uniform_real_distribution<double> ceil_height(1.5, 2.5);
  const double xn = half(rng), xp = half(rng), yn = half(rng), yp = half(rng);
  const double zf = -floor_depth(rng), zc = ceil_height(rng);
  const double cx = 0.5 * (xp - xn), cy = 0.5 * (yp - yn), cz = 0.5 * (zc + zf);
  const double lx = xp + xn, ly = yp + yn, lz = zc - zf;

  SceneSpec spec;
  spec.density = density;
  spec.seed = seed ^ 0x9E3779B97F4A7C15ULL;
  spec.planes.push_back({Vec3(cx, cy, zf), Vec3::UnitZ(), {lx, ly}});
  spec.planes.push_back({Vec3(cx, cy, zc), -Vec3::UnitZ(), {lx, ly}});
  spec.planes.push_back({Vec3(-xn, cy, cz), Vec3::UnitX(), {ly, lz}});
  spec.planes.push_back({Vec3(xp, cy, cz), -Vec3::UnitX(), {ly, lz}});
  spec.planes.push_back({Vec3(cx, -yn, cz), Vec3::UnitY(), {lx, lz}});
  spec.planes.push_back({Vec3(cx, yp, cz), -Vec3::UnitY(), {lx, lz}});

  std::uniform_int_distribution<int> box_count(3, 6);
  std::uniform_real_distribution<double> size(0.4, 1.5);
  std::uniform_real_distribution<double> ux(-xn + 1.0, xp - 1.0), uy(-yn + 1.0, yp - 1.0);
  const int boxes = box_count(rng);
  while (static_cast<int>(spec.boxes.size()) < boxes) {
    const Vec3 c(ux(rng), uy(rng), 0.0);
    if (c.head<2>().norm() < 2.0) continue;
    const Vec3 s(size(rng), size(rng), size(rng));
    BoxSpec b;
    b.min = Vec3(c.x() - 0.5 * s.x(), c.y() - 0.5 * s.y(), zf);
    b.max = Vec3(c.x() + 0.5 * s.x(), c.y() + 0.5 * s.y(), zf + s.z());
    spec.boxes.push_back(b);
  }
  return spec;
}

SceneSpec corridor_scene(double length, std::uint64_t seed, double density) {
  constexpr double kHalfWidth = 5.0, kFloor = -1.7, kCeiling = 2.3, kMargin = 25.0;
  std::mt19937_64 rng(seed);
  const double x0 = -kMargin, x1 = length + kMargin;
  const double cx = 0.5 * (x0 + x1), lx = x1 - x0;
  const double cz = 0.5 * (kFloor + kCeiling), lz = kCeiling - kFloor;

  SceneSpec spec;
  spec.density = density;
  spec.seed = seed ^ 0xD1B54A32D192ED03ULL;
  spec.planes.push_back({Vec3(cx, 0.0, kFloor), Vec3::UnitZ(), {lx, 2 * kHalfWidth}});
  spec.planes.push_back({Vec3(cx, 0.0, kCeiling), -Vec3::UnitZ(), {lx, 2 * kHalfWidth}});
  spec.planes.push_back({Vec3(cx, -kHalfWidth, cz), Vec3::UnitY(), {lx, lz}});
  spec.planes.push_back({Vec3(cx, kHalfWidth, cz), -Vec3::UnitY(), {lx, lz}});

  std::uniform_real_distribution<double> jitter(-1.0, 1.0);
  std::uniform_real_distribution<double> depth(0.4, 0.9);
  int side = 1;
  for (double x = x0 + 2.0; x < x1 - 2.0; x += 4.0 + jitter(rng)) {
    const double d = depth(rng);
    BoxSpec pillar;
    pillar.min = Vec3(x - 0.3, side > 0 ? kHalfWidth - d : -kHalfWidth, kFloor);
    pillar.max = Vec3(x + 0.3, side > 0 ? kHalfWidth : -kHalfWidth + d, kCeiling);
    spec.boxes.push_back(pillar);
    side = -side;
  }
  std::uniform_real_distribution<double> size(0.5, 1.2);
  std::uniform_real_distribution<double> lateral(1.8, 3.5);
  for (double x = x0 + 3.0; x < x1 - 3.0; x += 6.0 + 2.0 * jitter(rng)) {
    const double y = (jitter(rng) > 0 ? 1.0 : -1.0) * lateral(rng);
    const Vec3 s(size(rng), size(rng), size(rng));
    BoxSpec crate;
    crate.min = Vec3(x - 0.5 * s.x(), y - 0.5 * s.y(), kFloor);
    crate.max = Vec3(x + 0.5 * s.x(), y + 0.5 * s.y(), kFloor + s.z());
    spec.boxes.push_back(crate);
  }
  return spec;
}

SyntheticSequence make_sequence(const SequenceSpec& spec) {
  if (spec.frames < 2) throw std::invalid_argument("make_sequence: need >= 2 frames");
  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> phase(0.0, kTwoPi);
  std::uniform_real_distribution<double> freq_slow(0.15, 0.35), freq_fast(0.6, 1.2);
  const double f1 = freq_slow(rng), f2 = freq_fast(rng), f3 = freq_slow(rng);
  const double ph1 = phase(rng), ph2 = phase(rng), ph3 = phase(rng), ph4 = phase(rng),
               ph5 = phase(rng);

  auto heading = [&](double t) {
    return spec.heading_amplitude * (std::sin(kTwoPi * f1 * t + ph1) - std::sin(ph1)) +
           spec.heading_jitter * (std::sin(kTwoPi * f2 * t + ph2) - std::sin(ph2));
  };
  auto speed = [&](double t) { return spec.speed + spec.speed_variation * std::sin(kTwoPi * f3 * t + ph3); };
  auto roll = [&](double t) { return 0.01 * (std::sin(kTwoPi * 0.5 * t + ph4) - std::sin(ph4)); };
  auto pitch = [&](double t) { return 0.01 * (std::sin(kTwoPi * 0.4 * t + ph5) - std::sin(ph5)); };

  const double duration = (spec.frames - 1) * spec.frame_period;
  const double dt = 1.0 / spec.imu_rate;
  const auto samples = static_cast<std::size_t>(std::llround(duration * spec.imu_rate)) + 1;
  std::vector<TimedPose> dense(samples);
  Vec3 p = Vec3::Zero();
  for (std::size_t i = 0; i < samples; ++i) {
    const double t = static_cast<double>(i) * dt;
    if (i > 0) {
      const double tp = t - dt;
      const Vec3 v0 = speed(tp) * Vec3(std::cos(heading(tp)), std::sin(heading(tp)), 0.0);
      const Vec3 v1 = speed(t) * Vec3(std::cos(heading(t)), std::sin(heading(t)), 0.0);
      p += 0.5 * dt * (v0 + v1);
    }
    dense[i].time = t;
    dense[i].pose = Pose{Vec3(roll(t), pitch(t), heading(t)), p};
  }

  SyntheticSequence seq;
  const double travel = (p - dense.front().pose.t).norm();
  SceneSpec scene = corridor_scene(travel + 1.0, spec.seed + 17, spec.scene_density);
  seq.scene = sample_scene(scene);

  const double steps_per_frame = spec.frame_period * spec.imu_rate;
  const Mat4 world_from_first_inv = dense.front().pose.matrix().inverse();
  for (int k = 0; k < spec.frames; ++k) {
    const auto idx = static_cast<std::size_t>(std::llround(k * steps_per_frame));
    const TimedPose& tp = dense[std::min(idx, samples - 1)];
    seq.times.push_back(tp.time);
    seq.poses.push_back(world_from_first_inv * tp.pose.matrix());
    ScanOptions opts;
    opts.fov = spec.fov;
    opts.max_range = spec.max_range;
    opts.noise_sigma = spec.scan_noise;
    opts.seed = spec.seed * 1000003ULL + static_cast<std::uint64_t>(k);
    seq.scans.push_back(scan_from_pose(seq.scene.cloud, tp.pose, opts));
  }
  seq.imu = synthesize_imu_stream(dense, spec.imu_rate);
  return seq;
}

void export_sequence(const SyntheticSequence& seq, const fs::path& dir) {
  fs::create_directories(dir / "velodyne");
  for (std::size_t k = 0; k < seq.scans.size(); ++k) {
    char name[32];
    std::snprintf(name, sizeof(name), "%06zu.bin", k);
    write_velodyne_bin(dir / "velodyne" / name, ScanRecord::from_cloud(seq.scans[k]));
  }
  write_times(dir / "times.txt", seq.times);
  write_poses(dir / "poses.txt", seq.poses);
  {
    std::ofstream calib(dir / "calib.txt");
    if (!calib) throw IoError("cannot create " + (dir / "calib.txt").string());
    calib << "Tr: " << format_pose_line(Mat4::Identity()) << '\n';
  }
  write_oxts(dir / "oxts", seq.imu);
}

}  // namespace liodom
