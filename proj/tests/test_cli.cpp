#include <gtest/gtest.h>

#include <fstream>
#include <random>
#include <sstream>

#include "cli.hpp"
#include "liodom/dataset_io.hpp"
#include "liodom/synth.hpp"

using namespace liodom;

namespace {

struct Run {
  int code = 0;
  std::string out, err;
};

Run run(std::vector<std::string> args) {
  std::ostringstream out, err;
  Run r;
  r.code = cli_dispatch(args, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("liodom_cli_" + std::to_string(std::random_device{}()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string operator/(const std::string& name) const { return (path / name).string(); }
};

const std::string kConfigs =
    (fs::path(LIODOM_FIXTURES).parent_path().parent_path() / "configs").string();

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST(Cli, EvalIdenticalTrajectories) {
  TempDir tmp;
  Trajectory line;
  for (int k = 0; k < 30; ++k) {
    Mat4 T = Mat4::Identity();
    T(2, 3) = 0.5 * k;
    line.push_back(T);
  }
  write_poses(tmp / "gt.txt", line);
  const auto r = run({"eval", "--est", tmp / "gt.txt", "--gt", tmp / "gt.txt", "--lengths", "2,4",
                      "--csv", tmp / "report.csv"});
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("t_rel 0.00"), std::string::npos) << r.out;
  EXPECT_TRUE(fs::exists(tmp / "report.csv"));
}

TEST(Cli, ExitCodes) {
  TempDir tmp;
  EXPECT_EQ(run({"teleport"}).code, 1);
  EXPECT_EQ(run({}).code, 1);
  EXPECT_EQ(run({"--help"}).code, 0);
  EXPECT_EQ(run({"eval", "--est", tmp / "missing.txt", "--gt", tmp / "missing.txt"}).code, 2);

  std::ofstream(tmp / "bad.json") << R"({"trainnig": {}})";
  EXPECT_EQ(run({"register", "-c", tmp / "bad.json", "--sequence", tmp.path.string(), "-o",
                 tmp / "x.txt"})
                .code,
            1);
  EXPECT_EQ(run({"register", "--set", "training.epochs=\"many\"", "--sequence",
                 tmp.path.string(), "-o", tmp / "x.txt"})
                .code,
            1);
  // empty directory: no scans
  EXPECT_EQ(run({"register", "--sequence", tmp.path.string(), "-o", tmp / "x.txt"}).code, 2);

  std::ofstream(tmp / "odd.bin") << "0123456789";
  EXPECT_EQ(run({"register", "--source", tmp / "odd.bin", "--target", tmp / "odd.bin"}).code, 2);
}

TEST(Cli, DisjointPairIsNumericalFailure) {
  TempDir tmp;
  const auto scene = sample_scene(room_scene(3));
  PointCloud far = scene.cloud;
  for (auto& p : far.points) p += Vec3(500.0, 0.0, 0.0);
  write_velodyne_bin(tmp / "a.bin", ScanRecord::from_cloud(scene.cloud));
  write_velodyne_bin(tmp / "b.bin", ScanRecord::from_cloud(far));
  const auto r = run({"register", "--source", tmp / "a.bin", "--target", tmp / "b.bin", "--set",
                      "preprocess.voxel.target=512"});
  EXPECT_EQ(r.code, 3) << r.out << r.err;
}

TEST(Cli, SynthRegisterEvalRoundTrip) {
  TempDir tmp;
  const std::string seq = tmp / "seq";
  auto r = run({"synth", "-o", seq, "--frames", "15", "--seed", "4"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(fs::exists(fs::path(seq) / "synth.json"));

  r = run({"register", "--sequence", seq, "-o", tmp / "est.txt", "-c", kConfigs + "/kitti.json",
           "--set", "preprocess.voxel.target=8192"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(read_poses(tmp / "est.txt").size(), 15u);
  EXPECT_TRUE(fs::exists(tmp / "est.txt.pairs.csv"));
  EXPECT_TRUE(fs::exists(tmp / "est.txt.config.json"));

  r = run({"eval", "--est", tmp / "est.txt", "--gt", seq + "/poses.txt", "--lengths", "2,4,6,8"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto pos = r.out.find("t_rel ");
  ASSERT_NE(pos, std::string::npos) << r.out;
  EXPECT_LT(std::stod(r.out.substr(pos + 6)), 2.0) << r.out;

  r = run({"export-traj", "--poses", tmp / "est.txt", "-o", tmp / "traj.csv"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto csv = slurp(tmp / "traj.csv");
  EXPECT_EQ(csv.rfind("frame,x,z\n", 0), 0u);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 16);
}

TEST(Cli, GradcheckPasses) {
  const auto r = run({"gradcheck", "--seeds", "1"});
  EXPECT_EQ(r.code, 0) << r.out << r.err;
}

TEST(Cli, TrainThenInferIsDeterministic) {
  TempDir tmp;
  const std::string seq = tmp / "seq";
  const std::string desk = kConfigs + "/desk.json";
  ASSERT_EQ(run({"synth", "-o", seq, "--frames", "6", "--seed", "2", "--crop", "-c", desk}).code, 0);
  const std::vector<std::string> common = {"-c", desk, "--set", "training.epochs=2", "--set",
                                           "training.checkpoint_every=1", "--sequence", seq};

  for (const std::string dir : {"run_a", "run_b"}) {
    std::vector<std::string> args = {"train", "--run-dir", tmp / dir};
    args.insert(args.end(), common.begin(), common.end());
    const auto r = run(args);
    ASSERT_EQ(r.code, 0) << r.err;
  }
  const fs::path a = tmp.path / "run_a";
  EXPECT_TRUE(fs::exists(a / "config.json"));
  EXPECT_TRUE(fs::exists(a / "checkpoints" / "epoch_0001.ckpt"));
  EXPECT_TRUE(fs::exists(a / "checkpoints" / "final.ckpt"));
  const auto metrics = slurp(a / "metrics.csv");
  EXPECT_EQ(std::count(metrics.begin(), metrics.end(), '\n'), 3);
  EXPECT_EQ(metrics, slurp(tmp.path / "run_b" / "metrics.csv"));
  EXPECT_EQ(slurp(a / "checkpoints" / "final.ckpt"),
            slurp(tmp.path / "run_b" / "checkpoints" / "final.ckpt"));

  for (const std::string mode : {"learned", "hybrid"}) {
    const auto r = run({"infer", "--checkpoint", (a / "checkpoints" / "final.ckpt").string(),
                        "--mode", mode, "--sequence", seq, "-o", tmp / (mode + ".txt"), "-c", desk});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(read_poses(tmp / (mode + ".txt")).size(), 6u);
  }
  EXPECT_EQ(run({"infer", "--checkpoint", tmp / "nope.ckpt", "--sequence", seq, "-o",
                 tmp / "x.txt"})
                .code,
            2);
}
