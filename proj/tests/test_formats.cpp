#include <gtest/gtest.h>

#include <bit>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <random>
#include <sstream>

#include "liodom/dataset_io.hpp"
#include "liodom/errors.hpp"
#include "liodom/nn/checkpoint.hpp"

using namespace liodom;

namespace {

const fs::path kFixtures = LIODOM_FIXTURES;

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("liodom_fmt_" + std::to_string(std::random_device{}()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

void put_f32(std::string& out, float v) {
  const auto u = std::bit_cast<std::uint32_t>(v);
  for (int k = 0; k < 4; ++k) out.push_back(static_cast<char>((u >> (8 * k)) & 0xFF));
}

void write_bytes(const fs::path& p, const std::string& bytes) {
  std::ofstream(p, std::ios::binary) << bytes;
}

}  // namespace

TEST(VelodyneBin, GoldenValuesAndRoundTrip) {
  const auto scan = read_velodyne_bin(kFixtures / "scan.bin");
  ASSERT_EQ(scan.points.size(), 5u);
  EXPECT_EQ(scan.points[0], Eigen::Vector4f(1.5f, -2.25f, 0.125f, 0.5f));
  EXPECT_EQ(scan.points[2], Eigen::Vector4f(42.0f, 0.0078125f, 2.0f, 1.0f));
  EXPECT_EQ(scan.points[3], Eigen::Vector4f(0.1f, 0.2f, 0.3f, 0.25f));
  EXPECT_TRUE(std::signbit(scan.points[4].x()));
  TempDir tmp;
  write_velodyne_bin(tmp.path / "out.bin", scan);
  EXPECT_EQ(slurp(tmp.path / "out.bin"), slurp(kFixtures / "scan.bin"));
}

TEST(VelodyneBin, ThirtyTwoBytesTwoPoints) {
  TempDir tmp;
  std::string bytes;
  for (const float v : {1.0f, 2.0f, 3.0f, 0.5f, -1.0f, 0.0f, 8.0f, 0.0f}) put_f32(bytes, v);
  write_bytes(tmp.path / "two.bin", bytes);
  const auto scan = read_velodyne_bin(tmp.path / "two.bin");
  ASSERT_EQ(scan.points.size(), 2u);
  EXPECT_EQ(scan.points[1], Eigen::Vector4f(-1.0f, 0.0f, 8.0f, 0.0f));
}

TEST(VelodyneBin, EmptyAndMalformed) {
  TempDir tmp;
  write_bytes(tmp.path / "empty.bin", "");
  EXPECT_TRUE(read_velodyne_bin(tmp.path / "empty.bin").points.empty());
  write_bytes(tmp.path / "odd.bin", std::string(17, '\0'));
  EXPECT_THROW(read_velodyne_bin(tmp.path / "odd.bin"), FormatError);
  EXPECT_THROW(read_velodyne_bin(kFixtures / "scan_truncated.bin"), FormatError);
  std::string bytes;
  for (const float v : {1.0f, std::nanf(""), 0.0f, 0.0f}) put_f32(bytes, v);
  write_bytes(tmp.path / "nan.bin", bytes);
  EXPECT_THROW(read_velodyne_bin(tmp.path / "nan.bin"), FormatError);
  EXPECT_THROW(read_velodyne_bin(tmp.path / "missing.bin"), IoError);
}

TEST(Poses, GoldenFileRoundTrip) {
  const auto poses = read_poses(kFixtures / "poses.txt");
  ASSERT_EQ(poses.size(), 3u);
  EXPECT_TRUE(poses[0].isApprox(Mat4::Identity()));
  EXPECT_DOUBLE_EQ(poses[1](0, 3), 1.25);
  EXPECT_DOUBLE_EQ(poses[2](2, 3), -1.0);
  EXPECT_NEAR(poses[1](1, 0), std::sin(0.1), 1e-12);
  TempDir tmp;
  write_poses(tmp.path / "poses.txt", poses);
  EXPECT_EQ(slurp(tmp.path / "poses.txt"), slurp(kFixtures / "poses.txt"));
}

TEST(Poses, IdentityLineAndRandomRoundTrip) {
  TempDir tmp;
  write_bytes(tmp.path / "id.txt", "1 0 0 0 0 1 0 0 0 0 1 0\n");
  const auto id = read_poses(tmp.path / "id.txt");
  ASSERT_EQ(id.size(), 1u);
  EXPECT_EQ(id[0], Mat4::Identity());

  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-3, 3);
  Trajectory traj;
  for (int i = 0; i < 100; ++i) {
    traj.push_back(Pose{Vec3(u(rng), 0.3 * u(rng), u(rng)), Vec3(100 * u(rng), u(rng), 10 * u(rng))}
                       .matrix());
  }
  write_poses(tmp.path / "r.txt", traj);
  const auto back = read_poses(tmp.path / "r.txt");
  ASSERT_EQ(back.size(), traj.size());
  double worst = 0.0;
  for (std::size_t i = 0; i < traj.size(); ++i) worst = std::max(worst, (back[i] - traj[i]).cwiseAbs().maxCoeff());
  EXPECT_LT(worst, 1e-9);

  write_bytes(tmp.path / "bad.txt", "1 0 0 0 0 1 0 0 0 0 1\n");
  EXPECT_THROW(read_poses(tmp.path / "bad.txt"), FormatError);
  write_bytes(tmp.path / "bad2.txt", "1 0 0 0 0 1 0 0 0 0 1 x\n");
  EXPECT_THROW(read_poses(tmp.path / "bad2.txt"), FormatError);
}

TEST(Poses, FrameConversion) {
  std::mt19937_64 rng(2);
  Trajectory traj = {Mat4::Identity(), Pose{Vec3(0, 0, 0.2), Vec3(1, 2, 0)}.matrix()};
  const auto same = lidar_to_camera(traj, Mat4::Identity());
  for (std::size_t i = 0; i < traj.size(); ++i) EXPECT_EQ(same[i], traj[i]);
  const Mat4 Tr = Pose{Vec3(-1.57, 0.01, -1.57), Vec3(0.01, -0.07, -0.27)}.matrix();
  const auto cam = lidar_to_camera(traj, Tr);
  EXPECT_LT((cam[1] - Tr * traj[1] * Tr.inverse()).norm(), 1e-12);
  const auto back = camera_to_lidar(cam, Tr);
  EXPECT_LT((back[1] - traj[1]).norm(), 1e-12);
}

TEST(Oxts, ParsesRecordedFiles) {
  const auto recs = read_oxts(kFixtures / "oxts_raw");
  ASSERT_EQ(recs.size(), 3u);
  for (int k = 0; k < 3; ++k) {
    EXPECT_DOUBLE_EQ(recs[k].accel.x(), 0.25 * k - 0.5);
    EXPECT_DOUBLE_EQ(recs[k].accel.y(), 0.125);
    EXPECT_DOUBLE_EQ(recs[k].accel.z(), 9.75 + 0.01 * k);
    EXPECT_DOUBLE_EQ(recs[k].gyro.x(), 0.001 * k);
    EXPECT_DOUBLE_EQ(recs[k].gyro.y(), -0.002);
    EXPECT_DOUBLE_EQ(recs[k].gyro.z(), 0.03125 * k);
  }
  EXPECT_EQ(recs[0].timestamp, 0.0);
  EXPECT_NEAR(recs[1].timestamp, 0.010088971, 1e-9);
  EXPECT_NEAR(recs[2].timestamp, 0.019960665, 1e-9);
}

TEST(Oxts, GoldenRoundTrip) {
  const auto recs = read_oxts(kFixtures / "oxts_golden");
  ASSERT_EQ(recs.size(), 3u);
  TempDir tmp;
  write_oxts(tmp.path / "oxts", recs);
  for (const char* f : {"timestamps.txt", "data/0000000000.txt", "data/0000000001.txt",
                        "data/0000000002.txt"}) {
    EXPECT_EQ(slurp(tmp.path / "oxts" / f), slurp(kFixtures / "oxts_golden" / f)) << f;
  }
}

TEST(Oxts, LineExamples) {
  std::string line;
  for (int i = 0; i < 30; ++i) line += (i == 11 ? "0.1 " : "0 ");
  const auto r = parse_oxts_line(line, "mem", 1);
  EXPECT_EQ(r.accel.x(), 0.1);
  std::string zeros;
  for (int i = 0; i < 30; ++i) zeros += "0 ";
  const auto zero = parse_oxts_line(zeros, "mem", 1);
  EXPECT_EQ(zero.accel, Vec3::Zero());
  EXPECT_EQ(zero.gyro, Vec3::Zero());
  EXPECT_THROW(parse_oxts_line("1 2 3 4 5 6 7 8 9 10", "mem", 1), FormatError);
  EXPECT_THROW(read_oxts(kFixtures / "oxts_short"), FormatError);
}

TEST(Oxts, Timestamps) {
  EXPECT_DOUBLE_EQ(parse_kitti_timestamp("2011-09-26 13:02:25.5"), 13 * 3600 + 2 * 60 + 25.5);
  EXPECT_EQ(format_kitti_timestamp(3723.25), "2011-01-01 01:02:03.250000000");
  EXPECT_THROW(parse_kitti_timestamp("13:02:25"), FormatError);
}

TEST(ImuWindow, ResamplingRules) {
  std::vector<ImuRecord> recs;
  for (int i = 0; i < 60; ++i) {
    ImuRecord r;
    r.timestamp = 0.01 * (i + 1);
    r.accel = Vec3(i, 0, 0);
    recs.push_back(r);
  }
  // exactly S records in the interval
  const auto pass = window_imu(recs, 0.0, 0.15 + 1e-9, 15);
  for (int j = 0; j < 15; ++j) EXPECT_EQ(pass.rows(j, 0), j);
  // 30 records -> every 2nd
  const auto half = window_imu(recs, 0.0, 0.30 + 1e-9, 15);
  for (int j = 0; j < 15; ++j) EXPECT_EQ(half.rows(j, 0), 2 * j);
  // 5 records -> interpolated, endpoints kept
  const auto up = window_imu(recs, 0.0, 0.05 + 1e-9, 15);
  EXPECT_EQ(up.rows.rows(), 15);
  EXPECT_EQ(up.rows(0, 0), 0.0);
  EXPECT_EQ(up.rows(14, 0), 4.0);
  for (int j = 0; j < 15; ++j) EXPECT_NEAR(up.rows(j, 0), 4.0 * j / 14.0, 1e-12);
  EXPECT_THROW(window_imu(recs, 5.0, 6.0, 15), FormatError);
}

TEST(Checkpoint, GoldenBytesRoundTrip) {
  const std::string golden = slurp(kFixtures / "checkpoint.ckpt");
  const auto ckpt = nn::load_checkpoint(kFixtures / "checkpoint.ckpt");
  EXPECT_EQ(ckpt.architecture["kind"], "fixture");
  ASSERT_EQ(ckpt.tensors.size(), 3u);
  EXPECT_EQ(ckpt.tensors[0].first, "fc.weight");
  EXPECT_EQ(ckpt.tensors[0].second.shape(), (std::vector<int>{2, 3}));
  EXPECT_EQ(ckpt.tensors[0].second[5], 1.0 / 3.0);
  EXPECT_EQ(ckpt.tensors[1].second[1], -0.2);

  nn::Tensor w({2, 3}), b({2}), var({2});
  nn::ParamList params = {{"fc.weight", &w, true}, {"fc.bias", &b, true},
                          {"norm.running_var", &var, false}};
  nn::apply_checkpoint(ckpt, params);
  EXPECT_EQ(var[1], 2.5);
  EXPECT_EQ(nn::serialize_checkpoint(ckpt.architecture, params), golden);

  TempDir tmp;
  nn::save_checkpoint(tmp.path / "c.ckpt", ckpt.architecture, params);
  EXPECT_EQ(slurp(tmp.path / "c.ckpt"), golden);
}

TEST(Checkpoint, RejectsMismatches) {
  const auto ckpt = nn::load_checkpoint(kFixtures / "checkpoint.ckpt");
  nn::Tensor w({3, 2}), b({2}), var({2}), extra({1});
  EXPECT_THROW(nn::apply_checkpoint(ckpt, {{"fc.weight", &w, true}, {"fc.bias", &b, true},
                                           {"norm.running_var", &var, false}}),
               FormatError);
  nn::Tensor w2({2, 3});
  EXPECT_THROW(nn::apply_checkpoint(ckpt, {{"fc.weight", &w2, true}, {"fc.bias", &b, true}}),
               FormatError);
  EXPECT_THROW(nn::apply_checkpoint(ckpt, {{"fc.weight", &w2, true}, {"fc.bias", &b, true},
                                           {"norm.running_var", &var, false},
                                           {"extra", &extra, true}}),
               FormatError);
  std::string bytes = slurp(kFixtures / "checkpoint.ckpt");
  EXPECT_THROW(nn::parse_checkpoint(bytes.substr(0, bytes.size() - 3)), FormatError);
  bytes[0] = 'X';
  EXPECT_THROW(nn::parse_checkpoint(bytes), FormatError);
}
