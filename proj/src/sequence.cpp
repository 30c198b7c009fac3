#include "liodom/sequence.hpp"

#include <algorithm>
#include <bit>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <random>
#include <sstream>

#include "liodom/errors.hpp"
#include "liodom/evaluation.hpp"

namespace liodom {

namespace {

constexpr char kCacheMagic[8] = {'L', 'I', 'O', 'D', 'D', 'P', 'N', 'P'};

class Fnv1a {
 public:
  void add(const void* data, std::size_t n) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
      h_ ^= p[i];
      h_ *= 0x100000001b3ULL;
    }
  }
  template <typename T>
  void add(const T& v) {
    add(&v, sizeof(T));
  }
  std::uint64_t value() const { return h_; }

 private:
  std::uint64_t h_ = 0xcbf29ce484222325ULL;
};

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

std::uint64_t get_u64(const std::string& in, std::size_t pos) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) {
    v |= static_cast<std::uint64_t>(static_cast<unsigned char>(in[pos + i])) << (8 * i);
  }
  return v;
}

}  // namespace

SequenceData load_sequence(const fs::path& dir, const LoadOptions& opts) {
  SequenceData seq;
  seq.dir = dir;
  const fs::path velo = dir / "velodyne";
  if (!fs::is_directory(velo)) throw IoError("no velodyne/ directory in " + dir.string());
  std::vector<fs::path> all;
  for (const auto& e : fs::directory_iterator(velo)) {
    if (e.is_regular_file() && e.path().extension() == ".bin") all.push_back(e.path());
  }
  std::sort(all.begin(), all.end());
  if (opts.first >= all.size()) {
    throw FormatError(dir.string() + ": first frame " + std::to_string(opts.first) +
                      " beyond " + std::to_string(all.size()) + " scans");
  }
  const std::size_t end =
      opts.count == 0 ? all.size() : std::min(all.size(), opts.first + opts.count);
  seq.scan_files.assign(all.begin() + static_cast<long>(opts.first), all.begin() + static_cast<long>(end));
  for (const auto& f : seq.scan_files) seq.scans.push_back(read_velodyne_bin(f).to_cloud());

  if (fs::exists(dir / "times.txt")) {
    const auto times = read_times(dir / "times.txt");
    if (times.size() < end) {
      throw FormatError((dir / "times.txt").string() + ": fewer timestamps than scans");
    }
    seq.times.assign(times.begin() + static_cast<long>(opts.first), times.begin() + static_cast<long>(end));
  } else {
    for (std::size_t k = opts.first; k < end; ++k) {
      seq.times.push_back(static_cast<double>(k) * opts.frame_period);
    }
  }
  if (fs::exists(dir / "calib.txt")) {
    const auto calib = read_calib(dir / "calib.txt");
    const auto it = calib.find("Tr");
    if (it != calib.end()) seq.calibration = it->second;
  }
  if (fs::is_directory(dir / "oxts")) seq.imu = read_oxts(dir / "oxts");
  if (fs::exists(dir / "poses.txt")) {
    const auto cam = read_poses(dir / "poses.txt");
    if (cam.size() < end) {
      throw FormatError((dir / "poses.txt").string() + ": fewer poses than scans");
    }
    Trajectory lidar = camera_to_lidar(
        Trajectory(cam.begin() + static_cast<long>(opts.first), cam.begin() + static_cast<long>(end)),
        seq.calibration);
    const Mat4 base = lidar.front().inverse();
    for (auto& T : lidar) T = base * T;
    seq.ground_truth = std::move(lidar);
  }
  return seq;
}

std::string preprocess_key(const PointCloud& scan, const PreprocessParams& params) {
  Fnv1a h;
  h.add(params.planefit_k);
  h.add(params.ransac.distance_threshold);
  h.add(params.ransac.iterations);
  h.add(params.ransac.min_inlier_fraction);
  h.add(params.ransac.seed);
  h.add(params.voxel.initial_side);
  h.add(params.voxel.step);
  h.add(params.voxel.target);
  h.add(params.voxel.tolerance);
  h.add(params.voxel.max_passes);
  h.add(scan.points.size());
  for (const auto& p : scan.points) h.add(p.data(), 3 * sizeof(double));
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h.value()));
  return buf;
}

void write_preprocessed(const fs::path& path, const PreprocessedCloud& cloud) {
  std::string bytes(kCacheMagic, sizeof(kCacheMagic));
  put_u64(bytes, cloud.size());
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    for (int c = 0; c < 3; ++c) put_u64(bytes, std::bit_cast<std::uint64_t>(cloud.points[i][c]));
    for (int c = 0; c < 3; ++c) put_u64(bytes, std::bit_cast<std::uint64_t>(cloud.normals[i][c]));
  }
  // unique temporary name so concurrent writers never share a partial file
  const fs::path tmp = path.string() + ".tmp" + std::to_string(std::random_device{}());
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw IoError("cannot write " + tmp.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("write failed: " + tmp.string());
  }
  fs::rename(tmp, path);
}

PreprocessedCloud read_preprocessed(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  const std::string bytes = buf.str();
  if (bytes.size() < 16 || std::memcmp(bytes.data(), kCacheMagic, 8) != 0) {
    throw FormatError(path.string() + ": not a preprocessed-cloud file");
  }
  const std::uint64_t n = get_u64(bytes, 8);
  if (bytes.size() != 16 + n * 48) throw FormatError(path.string() + ": truncated");
  PreprocessedCloud cloud;
  cloud.points.resize(n);
  cloud.normals.resize(n);
  std::size_t pos = 16;
  for (std::size_t i = 0; i < n; ++i) {
    for (int c = 0; c < 3; ++c, pos += 8) cloud.points[i][c] = std::bit_cast<double>(get_u64(bytes, pos));
    for (int c = 0; c < 3; ++c, pos += 8) cloud.normals[i][c] = std::bit_cast<double>(get_u64(bytes, pos));
  }
  return cloud;
}

PreprocessedCloud preprocess_cached(const PointCloud& scan, const PreprocessParams& params,
                                    const std::optional<fs::path>& cache_dir, bool* hit) {
  if (hit) *hit = false;
  if (!cache_dir) return preprocess_scan(scan, params);
  const fs::path file = *cache_dir / (preprocess_key(scan, params) + ".dpnp");
  if (fs::exists(file)) {
    try {
      auto cloud = read_preprocessed(file);
      if (hit) *hit = true;
      return cloud;
    } catch (const FormatError&) {
      // fall through and overwrite the damaged entry
    }
  }
  auto cloud = preprocess_scan(scan, params);
  fs::create_directories(*cache_dir);
  write_preprocessed(file, cloud);
  return cloud;
}

std::optional<fs::path> cache_dir_from_env() {
  const char* v = std::getenv("LIODOM_CACHE_DIR");
  if (!v || !*v) return std::nullopt;
  return fs::path(v);
}

std::vector<std::shared_ptr<const Frame>> build_frames(const std::vector<PointCloud>& scans,
                                                       const std::vector<double>& times,
                                                       const ProjectionConfig& proj,
                                                       const PreprocessParams& params,
                                                       const std::optional<fs::path>& cache_dir) {
  std::vector<std::shared_ptr<const Frame>> frames;
  frames.reserve(scans.size());
  for (std::size_t k = 0; k < scans.size(); ++k) {
    const double t = k < times.size() ? times[k] : 0.0;
    frames.push_back(std::make_shared<const Frame>(
        make_frame(scans[k], preprocess_cached(scans[k], params, cache_dir), proj, t)));
  }
  return frames;
}

std::vector<FramePair> make_pairs(const std::vector<std::shared_ptr<const Frame>>& frames,
                                  const std::vector<ImuRecord>& imu, int S, bool with_imu) {
  if (frames.size() < 2) throw FormatError("a sequence needs at least 2 scans");
  if (with_imu && imu.empty()) {
    throw ConfigError("this sequence has no IMU records; only imu mode 'none' can run on it");
  }
  std::vector<FramePair> pairs;
  for (std::size_t k = 0; k + 1 < frames.size(); ++k) {
    FramePair p{frames[k], frames[k + 1], std::nullopt};
    if (with_imu) p.imu = window_imu(imu, frames[k]->time, frames[k + 1]->time, S);
    pairs.push_back(std::move(p));
  }
  return pairs;
}

std::string to_string(RunMode m) {
  switch (m) {
    case RunMode::Learned: return "learned";
    case RunMode::Classical: return "classical";
    case RunMode::Hybrid: return "hybrid";
  }
  return "?";
}

RunMode parse_run_mode(std::string_view s) {
  if (s == "learned") return RunMode::Learned;
  if (s == "classical") return RunMode::Classical;
  if (s == "hybrid") return RunMode::Hybrid;
  throw ConfigError("unknown run mode '" + std::string(s) + "' (expected learned, classical, hybrid)");
}

SequenceResult run_sequence(const std::vector<FramePair>& pairs, RunMode mode,
                            OdometryModel* model, const RunOptions& opts) {
  if (mode != RunMode::Classical && !model) {
    throw ConfigError("run mode '" + to_string(mode) + "' needs a model");
  }
  SequenceResult result;
  std::vector<Pose> relatives;
  relatives.reserve(pairs.size());
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    const FramePair& pair = pairs[k];
    PairReport rep;
    rep.index = k;
    Pose init = Pose::identity();
    if (mode != RunMode::Classical) {
      rep.network = model->estimate(pair, opts.projection, false).pose;
      init = *rep.network;
    }
    if (mode == RunMode::Learned) {
      rep.relative = init;
    } else {
      try {
        const auto reg =
            register_clouds(pair.current->cloud, pair.last->cloud, init, opts.registration);
        rep.relative = reg.pose;
        rep.final_loss = reg.diagnostics.final_loss.total;
        rep.matches = reg.diagnostics.match_counts.empty() ? 0 : reg.diagnostics.match_counts.back();
      } catch (const NumericalError& e) {
        rep.registration_failed = true;
        rep.message = e.what();
      } catch (const std::invalid_argument& e) {
        rep.registration_failed = true;
        rep.message = e.what();
      }
      if (rep.registration_failed) {
        rep.relative = Pose::identity();
        ++result.failures;
      }
    }
    relatives.push_back(rep.relative);
    result.pairs.push_back(std::move(rep));
  }
  result.poses = accumulate(relatives);
  return result;
}

std::string format_pair_reports_csv(const SequenceResult& result) {
  std::ostringstream out;
  out << "pair,tx,ty,tz,roll,pitch,yaw,registration_failed,final_loss,matches\n";
  char buf[256];
  for (const auto& r : result.pairs) {
    std::snprintf(buf, sizeof(buf), "%zu,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%d,%.9g,%zu\n", r.index,
                  r.relative.t.x(), r.relative.t.y(), r.relative.t.z(), r.relative.rpy.x(),
                  r.relative.rpy.y(), r.relative.rpy.z(), r.registration_failed ? 1 : 0,
                  r.final_loss, r.matches);
    out << buf;
  }
  return out.str();
}

}  // namespace liodom
