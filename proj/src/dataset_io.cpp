#include "liodom/dataset_io.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include "liodom/errors.hpp"

namespace liodom {

namespace {

std::uint32_t to_little(std::uint32_t v) {
  if constexpr (std::endian::native == std::endian::big) {
    v = ((v & 0xFFu) << 24) | ((v & 0xFF00u) << 8) | ((v >> 8) & 0xFF00u) | (v >> 24);
  }
  return v;
}

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    std::size_t j = i;
    while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j]))) ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

bool parse_double(std::string_view tok, double& out) {
  if (!tok.empty() && tok.front() == '+') tok.remove_prefix(1);
  const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), out);
  return res.ec == std::errc() && res.ptr == tok.data() + tok.size();
}

std::string where(const fs::path& file, std::size_t line_no) {
  return file.string() + ":" + std::to_string(line_no);
}

std::ifstream open_text(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  return in;
}

std::ofstream create_text(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot create " + path.string());
  return out;
}

bool blank(std::string_view line) {
  return std::all_of(line.begin(), line.end(),
                     [](char c) { return std::isspace(static_cast<unsigned char>(c)); });
}

Mat4 pose_from_fields(const std::vector<std::string_view>& toks, std::size_t first,
                      const std::string& loc) {
  Mat4 T = Mat4::Identity();
  for (int k = 0; k < 12; ++k) {
    double v = 0.0;
    if (!parse_double(toks[first + k], v)) {
      throw FormatError(loc + ": invalid number '" + std::string(toks[first + k]) + "'");
    }
    T(k / 4, k % 4) = v;
  }
  return T;
}

}  // namespace

PointCloud ScanRecord::to_cloud() const {
  PointCloud cloud;
  cloud.points.reserve(points.size());
  for (const auto& p : points) cloud.points.emplace_back(p.x(), p.y(), p.z());
  return cloud;
}

ScanRecord ScanRecord::from_cloud(const PointCloud& cloud) {
  ScanRecord rec;
  rec.points.reserve(cloud.points.size());
  for (const auto& p : cloud.points) {
    rec.points.emplace_back(static_cast<float>(p.x()), static_cast<float>(p.y()),
                            static_cast<float>(p.z()), 0.0f);
  }
  return rec;
}

ScanRecord read_velodyne_bin(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("read failed: " + path.string());
  if (bytes.size() % 16 != 0) {
    throw FormatError(path.string() + ": size " + std::to_string(bytes.size()) +
                      " bytes is not a multiple of 16");
  }
  ScanRecord rec;
  rec.points.resize(bytes.size() / 16);
  for (std::size_t i = 0; i < rec.points.size(); ++i) {
    for (int c = 0; c < 4; ++c) {
      std::uint32_t raw = 0;
      std::memcpy(&raw, bytes.data() + i * 16 + c * 4, 4);
      const float v = std::bit_cast<float>(to_little(raw));
      if (!std::isfinite(v)) {
        throw FormatError(path.string() + ": non-finite value at byte offset " +
                          std::to_string(i * 16 + c * 4));
      }
      rec.points[i][c] = v;
    }
  }
  return rec;
}

void write_velodyne_bin(const fs::path& path, const ScanRecord& scan) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot create " + path.string());
  std::vector<char> bytes(scan.points.size() * 16);
  for (std::size_t i = 0; i < scan.points.size(); ++i) {
    for (int c = 0; c < 4; ++c) {
      const std::uint32_t raw = to_little(std::bit_cast<std::uint32_t>(scan.points[i][c]));
      std::memcpy(bytes.data() + i * 16 + c * 4, &raw, 4);
    }
  }
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed: " + path.string());
}

ImuRecord parse_oxts_line(std::string_view line, const std::string& file, std::size_t line_no) {
  const auto toks = split_ws(line);
  if (toks.size() < 23) {
    throw FormatError(where(file, line_no) + ": expected at least 23 fields, got " +
                      std::to_string(toks.size()));
  }
  double v[23];
  for (int i = 0; i < 23; ++i) {
    if (!parse_double(toks[i], v[i])) {
      throw FormatError(where(file, line_no) + ": invalid number '" + std::string(toks[i]) + "'");
    }
  }
  ImuRecord rec;
  rec.accel = Vec3(v[11], v[12], v[13]);
  rec.gyro = Vec3(v[17], v[18], v[19]);
  return rec;
}

double parse_kitti_timestamp(std::string_view text) {
  const auto toks = split_ws(text);
  if (toks.size() != 2) throw FormatError("invalid timestamp '" + std::string(text) + "'");
  const std::string_view clock = toks[1];
  int hh = 0, mm = 0;
  double ss = 0.0;
  if (clock.size() < 8 || clock[2] != ':' || clock[5] != ':' ||
      std::from_chars(clock.data(), clock.data() + 2, hh).ec != std::errc() ||
      std::from_chars(clock.data() + 3, clock.data() + 5, mm).ec != std::errc() ||
      !parse_double(clock.substr(6), ss)) {
    throw FormatError("invalid timestamp '" + std::string(text) + "'");
  }
  return hh * 3600.0 + mm * 60.0 + ss;
}

std::string format_kitti_timestamp(double seconds_of_day) {
  const auto total_ns = static_cast<long long>(std::llround(seconds_of_day * 1e9));
  const long long ns = total_ns % 1000000000LL;
  const long long s = total_ns / 1000000000LL;
  char buf[64];
  std::snprintf(buf, sizeof(buf), "2011-01-01 %02lld:%02lld:%02lld.%09lld", s / 3600,
                (s / 60) % 60, s % 60, ns);
  return buf;
}

std::vector<ImuRecord> read_oxts(const fs::path& dir, double fallback_period) {
  if (!fs::is_directory(dir)) throw IoError("not a directory: " + dir.string());
  const fs::path data_dir = fs::is_directory(dir / "data") ? dir / "data" : dir;
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(data_dir)) {
    if (e.is_regular_file() && e.path().extension() == ".txt" &&
        e.path().filename() != "timestamps.txt") {
      files.push_back(e.path());
    }
  }
  std::sort(files.begin(), files.end());

  std::vector<ImuRecord> records;
  for (const auto& f : files) {
    auto in = open_text(f);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (blank(line)) continue;
      records.push_back(parse_oxts_line(line, f.string(), line_no));
    }
  }

  const fs::path ts_path = dir / "timestamps.txt";
  if (fs::exists(ts_path)) {
    auto in = open_text(ts_path);
    std::vector<double> stamps;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (blank(line)) continue;
      try {
        stamps.push_back(parse_kitti_timestamp(line));
      } catch (const FormatError& e) {
        throw FormatError(where(ts_path, line_no) + ": " + e.what());
      }
    }
    if (stamps.size() != records.size()) {
      throw FormatError(ts_path.string() + ": " + std::to_string(stamps.size()) +
                        " timestamps for " + std::to_string(records.size()) + " records");
    }
    for (std::size_t i = 0; i < records.size(); ++i) records[i].timestamp = stamps[i] - stamps[0];
  } else {
    for (std::size_t i = 0; i < records.size(); ++i) {
      records[i].timestamp = static_cast<double>(i) * fallback_period;
    }
  }
  return records;
}

void write_oxts(const fs::path& dir, const std::vector<ImuRecord>& records) {
  fs::create_directories(dir / "data");
  auto ts = create_text(dir / "timestamps.txt");
  for (std::size_t i = 0; i < records.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof(name), "%010zu.txt", i);
    auto out = create_text(dir / "data" / name);
    double f[30] = {};
    for (int k = 0; k < 3; ++k) {
      f[11 + k] = records[i].accel[k];
      f[17 + k] = records[i].gyro[k];
    }
    std::string line;
    char buf[40];
    for (int k = 0; k < 30; ++k) {
      std::snprintf(buf, sizeof(buf), "%.12g", f[k]);
      if (k) line += ' ';
      line += buf;
    }
    out << line << '\n';
    ts << format_kitti_timestamp(records[i].timestamp) << '\n';
  }
}

ImuWindow window_imu(const std::vector<ImuRecord>& records, double t0, double t1, int S) {
  if (S < 1) throw std::invalid_argument("window_imu: S must be >= 1");
  std::vector<const ImuRecord*> sel;
  for (const auto& r : records) {
    if (r.timestamp > t0 && r.timestamp <= t1) sel.push_back(&r);
  }
  if (sel.empty()) {
    throw FormatError("no IMU records in (" + std::to_string(t0) + ", " + std::to_string(t1) + "]");
  }
  const std::size_t n = sel.size();
  ImuWindow win;
  win.rows.resize(S, 6);
  win.timestamps.resize(S);
  auto row_of = [](const ImuRecord& r) {
    Eigen::Matrix<double, 1, 6> row;
    row << r.accel.transpose(), r.gyro.transpose();
    return row;
  };
  if (n >= static_cast<std::size_t>(S)) {
    for (int j = 0; j < S; ++j) {
      const std::size_t idx = static_cast<std::size_t>(j) * n / static_cast<std::size_t>(S);
      win.rows.row(j) = row_of(*sel[idx]);
      win.timestamps[j] = sel[idx]->timestamp;
    }
    return win;
  }
  for (int j = 0; j < S; ++j) {
    const double u = S == 1 ? 0.0 : static_cast<double>(j) * static_cast<double>(n - 1) / (S - 1);
    const std::size_t a = std::min(static_cast<std::size_t>(std::floor(u)), n - 1);
    const std::size_t b = std::min(a + 1, n - 1);
    const double f = u - static_cast<double>(a);
    win.rows.row(j) = (1.0 - f) * row_of(*sel[a]) + f * row_of(*sel[b]);
    win.timestamps[j] = (1.0 - f) * sel[a]->timestamp + f * sel[b]->timestamp;
  }
  return win;
}

std::vector<ImuWindow> window_imu(const std::vector<ImuRecord>& records,
                                  const std::vector<double>& scan_times, int S) {
  std::vector<ImuWindow> out;
  for (std::size_t k = 0; k + 1 < scan_times.size(); ++k) {
    out.push_back(window_imu(records, scan_times[k], scan_times[k + 1], S));
  }
  return out;
}

Trajectory read_poses(const fs::path& path) {
  auto in = open_text(path);
  Trajectory poses;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (blank(line)) continue;
    const auto toks = split_ws(line);
    if (toks.size() != 12) {
      throw FormatError(where(path, line_no) + ": expected 12 fields, got " +
                        std::to_string(toks.size()));
    }
    poses.push_back(pose_from_fields(toks, 0, where(path, line_no)));
  }
  return poses;
}

std::string format_pose_line(const Mat4& pose) {
  std::string line;
  char buf[40];
  for (int k = 0; k < 12; ++k) {
    std::snprintf(buf, sizeof(buf), "%.12e", pose(k / 4, k % 4));
    if (k) line += ' ';
    line += buf;
  }
  return line;
}

void write_poses(const fs::path& path, const Trajectory& poses) {
  auto out = create_text(path);
  for (const auto& T : poses) out << format_pose_line(T) << '\n';
  if (!out) throw IoError("write failed: " + path.string());
}

std::map<std::string, Mat4> read_calib(const fs::path& path) {
  auto in = open_text(path);
  std::map<std::string, Mat4> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (blank(line)) continue;
    const auto colon = line.find(':');
    if (colon == std::string::npos) throw FormatError(where(path, line_no) + ": missing ':'");
    const std::string key(split_ws(std::string_view(line).substr(0, colon)).at(0));
    const auto toks = split_ws(std::string_view(line).substr(colon + 1));
    if (toks.size() != 12) {
      throw FormatError(where(path, line_no) + ": expected 12 values for '" + key + "', got " +
                        std::to_string(toks.size()));
    }
    out[key] = pose_from_fields(toks, 0, where(path, line_no));
  }
  return out;
}

Trajectory lidar_to_camera(const Trajectory& lidar_poses, const Mat4& Tr) {
  const Mat4 inv = Tr.inverse();
  Trajectory out;
  out.reserve(lidar_poses.size());
  for (const auto& T : lidar_poses) out.push_back(Tr * T * inv);
  return out;
}

Trajectory camera_to_lidar(const Trajectory& camera_poses, const Mat4& Tr) {
  const Mat4 inv = Tr.inverse();
  Trajectory out;
  out.reserve(camera_poses.size());
  for (const auto& T : camera_poses) out.push_back(inv * T * Tr);
  return out;
}

std::vector<double> read_times(const fs::path& path) {
  auto in = open_text(path);
  std::vector<double> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (blank(line)) continue;
    const auto toks = split_ws(line);
    double v = 0.0;
    if (toks.size() != 1 || !parse_double(toks[0], v)) {
      throw FormatError(where(path, line_no) + ": expected one number");
    }
    out.push_back(v);
  }
  return out;
}

void write_times(const fs::path& path, const std::vector<double>& times) {
  auto out = create_text(path);
  char buf[40];
  for (double t : times) {
    std::snprintf(buf, sizeof(buf), "%.6e", t);
    out << buf << '\n';
  }
}

}  // namespace liodom
