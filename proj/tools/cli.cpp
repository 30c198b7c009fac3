#include "cli.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>

#include <CLI11.hpp>

#include "liodom/config.hpp"
#include "liodom/errors.hpp"
#include "liodom/evaluation.hpp"
#include "liodom/nn/checkpoint.hpp"
#include "liodom/nn/gradcheck.hpp"
#include "liodom/sequence.hpp"
#include "liodom/synth.hpp"

namespace liodom {

namespace {

struct ConfigArgs {
  std::vector<std::string> files;
  std::vector<std::string> overrides;

  void attach(CLI::App* cmd) {
    cmd->add_option("-c,--config", files, "JSON config file(s), applied in order");
    cmd->add_option("-s,--set", overrides, "override, e.g. --set training.epochs=5");
  }

  RunConfig resolve() const {
    std::vector<fs::path> paths(files.begin(), files.end());
    return load_run_config(paths, overrides);
  }
};

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
}

fs::path sibling(const fs::path& out, const std::string& suffix) {
  return fs::path(out.string() + suffix);
}

std::string sequence_dir(const RunConfig& cfg, const std::string& flag) {
  const std::string dir = flag.empty() ? cfg.data.sequence : flag;
  if (dir.empty()) throw ConfigError("no sequence given (--sequence or data.sequence)");
  return dir;
}

SequenceData load(const RunConfig& cfg, const std::string& dir) {
  LoadOptions lo;
  lo.first = cfg.data.first;
  lo.count = cfg.data.count;
  lo.frame_period = cfg.data.frame_period;
  return load_sequence(dir, lo);
}

std::vector<FramePair> pairs_for(const RunConfig& cfg, const SequenceData& seq, bool with_imu) {
  const auto frames =
      build_frames(seq.scans, seq.times, cfg.projection, cfg.preprocess, cache_dir_from_env());
  return make_pairs(frames, seq.imu, cfg.model.imu_window, with_imu);
}

std::vector<Pose> ground_truth_relatives(const SequenceData& seq) {
  std::vector<Pose> out;
  if (!seq.ground_truth) return out;
  for (const auto& T : relative_motions(*seq.ground_truth)) out.push_back(Pose::from_matrix(T));
  return out;
}

nlohmann::json architecture(const RunConfig& cfg) {
  const auto full = to_json(cfg);
  return {{"model", full.at("model")}, {"projection", full.at("projection")}};
}

void print_pose(std::ostream& out, const Pose& p) {
  char buf[160];
  std::snprintf(buf, sizeof(buf), "t = (%.6f, %.6f, %.6f) m  rpy = (%.6f, %.6f, %.6f) deg\n",
                p.t.x(), p.t.y(), p.t.z(), p.rpy.x() * 180.0 / M_PI, p.rpy.y() * 180.0 / M_PI,
                p.rpy.z() * 180.0 / M_PI);
  out << buf;
}

int cmd_preprocess(const ConfigArgs& ca, const std::string& seq_flag, const std::string& cache_flag,
                   std::ostream& out) {
  const RunConfig cfg = ca.resolve();
  std::optional<fs::path> cache = cache_flag.empty() ? cache_dir_from_env() : fs::path(cache_flag);
  if (!cache) throw ConfigError("no cache directory: set LIODOM_CACHE_DIR or pass --cache-dir");
  const SequenceData seq = load(cfg, sequence_dir(cfg, seq_flag));
  fs::create_directories(*cache);
  write_run_config(*cache / "config.json", cfg);
  std::size_t hits = 0;
  for (std::size_t k = 0; k < seq.scans.size(); ++k) {
    bool hit = false;
    const auto cloud = preprocess_cached(seq.scans[k], cfg.preprocess, cache, &hit);
    hits += hit ? 1 : 0;
    out << seq.scan_files[k].filename().string() << ": " << seq.scans[k].size() << " -> "
        << cloud.size() << " points" << (hit ? " (cached)" : "") << '\n';
  }
  out << seq.scans.size() << " scans, " << hits << " served from " << cache->string() << '\n';
  return kExitOk;
}

int cmd_register(const ConfigArgs& ca, const std::string& seq_flag, const std::string& source,
                 const std::string& target, const std::string& out_path, std::ostream& out,
                 std::ostream& err) {
  const RunConfig cfg = ca.resolve();
  if (!source.empty() || !target.empty()) {
    if (source.empty() || target.empty()) throw ConfigError("--source and --target go together");
    const auto src = preprocess_scan(read_velodyne_bin(source).to_cloud(), cfg.preprocess);
    const auto tgt = preprocess_scan(read_velodyne_bin(target).to_cloud(), cfg.preprocess);
    const auto res = register_clouds(src, tgt, Pose::identity(), cfg.registration);
    print_pose(out, res.pose);
    out << format_pose_line(res.pose.matrix()) << '\n';
    out << "loss " << res.diagnostics.final_loss.total << "  rounds "
        << res.diagnostics.outer_iterations << (res.diagnostics.converged ? "  converged" : "")
        << '\n';
    return kExitOk;
  }
  if (out_path.empty()) throw ConfigError("register: --out is required in sequence mode");
  const SequenceData seq = load(cfg, sequence_dir(cfg, seq_flag));
  RunOptions ro{cfg.registration, cfg.projection};
  const auto result = run_sequence(pairs_for(cfg, seq, false), RunMode::Classical, nullptr, ro);
  write_poses(out_path, lidar_to_camera(result.poses, seq.calibration));
  write_text(sibling(out_path, ".pairs.csv"), format_pair_reports_csv(result));
  write_run_config(sibling(out_path, ".config.json"), cfg);
  out << "wrote " << result.poses.size() << " poses to " << out_path << '\n';
  if (result.failures > 0) {
    err << result.failures << " pair(s) failed to register; identity substituted (see "
        << sibling(out_path, ".pairs.csv").string() << ")\n";
  }
  return result.failures == result.pairs.size() ? kExitNumeric : kExitOk;
}

int cmd_train(const ConfigArgs& ca, const std::string& seq_flag, const std::string& run_dir,
              std::ostream& out) {
  const RunConfig cfg = ca.resolve();
  const bool with_imu = cfg.model.imu_mode != ImuMode::None;
  const SequenceData seq = load(cfg, sequence_dir(cfg, seq_flag));
  const auto pairs = pairs_for(cfg, seq, with_imu);
  const auto gt = ground_truth_relatives(seq);

  std::vector<FramePair> val_pairs;
  std::vector<Pose> val_gt;
  if (!cfg.data.validation_sequence.empty()) {
    const SequenceData val = load(cfg, cfg.data.validation_sequence);
    val_pairs = pairs_for(cfg, val, with_imu);
    val_gt = ground_truth_relatives(val);
  }

  const fs::path dir(run_dir);
  fs::create_directories(dir / "checkpoints");
  write_run_config(dir / "config.json", cfg);
  std::ofstream metrics(dir / "metrics.csv");
  if (!metrics) throw IoError("cannot write " + (dir / "metrics.csv").string());
  metrics << "epoch,learning_rate,mean_loss,mean_point_to_plane,mean_plane_to_plane,"
             "mean_matches,pairs,skipped,steps,pose_error,val_loss,val_pose_error\n";

  OdometryModel model(cfg.model, cfg.seed);
  Trainer trainer(model, cfg.training, cfg.projection);
  const auto arch = architecture(cfg);

  auto mean_pose_error = [&](const std::vector<FramePair>& ps, const std::vector<Pose>& truth) {
    if (truth.size() != ps.size()) return std::nan("");
    double e = 0.0;
    for (std::size_t i = 0; i < ps.size(); ++i) {
      e += pose_error(model.estimate(ps[i], cfg.projection, false).pose, truth[i]);
    }
    return e / static_cast<double>(ps.size());
  };
  auto mean_loss = [&](const std::vector<FramePair>& ps) {
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& p : ps) {
      try {
        sum += pair_loss(p, model.estimate(p, cfg.projection, false).pose, cfg.training.loss,
                         cfg.projection).terms.total;
        ++n;
      } catch (const NumericalError&) {
      }
    }
    return n ? sum / static_cast<double>(n) : std::nan("");
  };

  for (int e = 0; e < cfg.training.epochs; ++e) {
    const EpochStats st = trainer.train_epoch(pairs);
    const double perr = mean_pose_error(pairs, gt);
    const double vloss = val_pairs.empty() ? std::nan("") : mean_loss(val_pairs);
    const double verr = val_pairs.empty() ? std::nan("") : mean_pose_error(val_pairs, val_gt);
    char row[512];
    std::snprintf(row, sizeof(row), "%d,%.9g,%.9g,%.9g,%.9g,%.9g,%zu,%zu,%zu,%.9g,%.9g,%.9g\n",
                  st.epoch, st.learning_rate, st.mean_loss, st.mean_point_to_plane,
                  st.mean_plane_to_plane, st.mean_matches, st.pairs, st.skipped, st.steps, perr,
                  vloss, verr);
    metrics << row << std::flush;
    out << "epoch " << st.epoch << "  loss " << st.mean_loss << "  lr " << st.learning_rate;
    if (!std::isnan(perr)) out << "  pose_error " << perr;
    if (st.skipped) out << "  skipped " << st.skipped;
    out << '\n';
    if (!std::isfinite(st.mean_loss)) throw NumericalError("training loss became non-finite");
    if (cfg.training.checkpoint_every > 0 && (e + 1) % cfg.training.checkpoint_every == 0) {
      char name[32];
      std::snprintf(name, sizeof(name), "epoch_%04d.ckpt", e + 1);
      nn::save_checkpoint(dir / "checkpoints" / name, arch, model.parameters());
    }
  }
  nn::save_checkpoint(dir / "checkpoints" / "final.ckpt", arch, model.parameters());
  out << "checkpoint " << (dir / "checkpoints" / "final.ckpt").string() << '\n';
  return kExitOk;
}

int cmd_infer(const ConfigArgs& ca, const std::string& seq_flag, const std::string& ckpt_path,
              const std::string& mode_name, const std::string& out_path, std::ostream& out,
              std::ostream& err) {
  RunConfig cfg = ca.resolve();
  const RunMode mode = parse_run_mode(mode_name);
  if (mode == RunMode::Classical) throw ConfigError("infer runs learned or hybrid; use register");
  const auto ckpt = nn::load_checkpoint(ckpt_path);
  // The checkpoint fixes the architecture and the projection it was trained with.
  nlohmann::json patch = to_json(cfg);
  if (ckpt.architecture.contains("model")) patch["model"] = ckpt.architecture.at("model");
  if (ckpt.architecture.contains("projection")) {
    patch["projection"] = ckpt.architecture.at("projection");
  }
  cfg = run_config_from_json(patch);

  OdometryModel model(cfg.model, cfg.seed);
  nn::apply_checkpoint(ckpt, model.parameters());
  const SequenceData seq = load(cfg, sequence_dir(cfg, seq_flag));
  RunOptions ro{cfg.registration, cfg.projection};
  const auto result =
      run_sequence(pairs_for(cfg, seq, cfg.model.imu_mode != ImuMode::None), mode, &model, ro);
  write_poses(out_path, lidar_to_camera(result.poses, seq.calibration));
  write_text(sibling(out_path, ".pairs.csv"), format_pair_reports_csv(result));
  write_run_config(sibling(out_path, ".config.json"), cfg);
  out << "wrote " << result.poses.size() << " poses to " << out_path << '\n';
  if (result.failures > 0) {
    err << result.failures << " pair(s) failed to register; identity substituted\n";
  }
  return kExitOk;
}

int cmd_eval(const std::string& est, const std::string& gt, const std::vector<double>& lengths,
             int stride, const std::string& csv, std::ostream& out) {
  EvalOptions opts;
  if (!lengths.empty()) opts.lengths = lengths;
  if (stride < 1) throw ConfigError("--stride must be >= 1");
  opts.stride = stride;
  const auto report = kitti_relative_errors(read_poses(est), read_poses(gt), opts);
  out << format_report_table(report);
  if (!csv.empty()) write_text(csv, format_report_csv(report));
  return kExitOk;
}

struct SynthArgs {
  std::string out;
  int frames = 21;
  std::uint64_t seed = 1;
  double speed = 4.0;
  double noise = 0.0;
  double imu_rate = 100.0;
  double heading = 0.08;
  bool crop = false;
};

int cmd_synth(const ConfigArgs& ca, const SynthArgs& a, std::ostream& out) {
  const RunConfig cfg = ca.resolve();
  SequenceSpec spec;
  spec.frames = a.frames;
  spec.seed = a.seed;
  spec.speed = a.speed;
  spec.scan_noise = a.noise;
  spec.imu_rate = a.imu_rate;
  spec.heading_amplitude = a.heading;
  if (a.crop) spec.fov = cfg.projection;
  const auto seq = make_sequence(spec);
  export_sequence(seq, a.out);
  const nlohmann::json desc = {{"frames", spec.frames},         {"seed", spec.seed},
                               {"speed", spec.speed},           {"scan_noise", spec.scan_noise},
                               {"imu_rate", spec.imu_rate},     {"heading_amplitude", spec.heading_amplitude},
                               {"frame_period", spec.frame_period}, {"cropped_to_projection", a.crop}};
  write_text(fs::path(a.out) / "synth.json", desc.dump(2) + "\n");
  if (a.crop) write_run_config(fs::path(a.out) / "config.json", cfg);
  std::size_t points = 0;
  for (const auto& s : seq.scans) points += s.size();
  out << "wrote " << seq.scans.size() << " scans (" << points << " points), " << seq.imu.size()
      << " IMU records to " << a.out << '\n';
  return kExitOk;
}

int cmd_gradcheck(int seeds, std::uint64_t base_seed, std::ostream& out) {
  constexpr double kTolerance = 1e-4;
  bool ok = true;
  char buf[160];
  out << "suite             max_rel_error  coords   seconds\n";
  for (const auto& r : nn::run_gradient_suites(seeds, base_seed)) {
    const bool pass = r.max_relative_error < kTolerance;
    ok = ok && pass;
    std::snprintf(buf, sizeof(buf), "%-16s  %13.3e  %6zu  %8.2f  %s\n", r.name.c_str(),
                  r.max_relative_error, r.coordinates, r.seconds, pass ? "ok" : "FAIL");
    out << buf;
  }
  return ok ? kExitOk : kExitNumeric;
}

int cmd_export(const std::string& poses, const std::string& out_path, const std::string& plane,
               std::ostream& out) {
  if (plane != "xz" && plane != "xy") throw ConfigError("--plane must be xz or xy");
  const auto traj = read_poses(poses);
  const int a = 0, b = plane == "xz" ? 2 : 1;
  std::string text = std::string("frame,") + plane[0] + "," + plane[1] + "\n";
  char buf[96];
  for (std::size_t k = 0; k < traj.size(); ++k) {
    std::snprintf(buf, sizeof(buf), "%zu,%.9g,%.9g\n", k, traj[k](a, 3), traj[k](b, 3));
    text += buf;
  }
  write_text(out_path, text);
  out << "wrote " << traj.size() << " rows to " << out_path << '\n';
  return kExitOk;
}

}  // namespace

int cli_dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Lidar-inertial odometry toolkit", "liodom"};
  app.require_subcommand(1);

  ConfigArgs pre_cfg, reg_cfg, train_cfg, infer_cfg, synth_cfg;
  std::string seq, cache_dir, source, target, out_path, run_dir, ckpt, mode = "learned";
  std::string est, gt, csv, poses, plane = "xz";
  std::vector<double> lengths;
  int stride = 10, seeds = 10;
  std::uint64_t base_seed = 1;
  SynthArgs sa;

  auto* pre = app.add_subcommand("preprocess", "cache downsampled clouds and normals per scan");
  pre_cfg.attach(pre);
  pre->add_option("--sequence", seq, "sequence directory (overrides data.sequence)");
  pre->add_option("--cache-dir", cache_dir, "cache directory (default $LIODOM_CACHE_DIR)");

  auto* reg = app.add_subcommand("register", "classical odometry for a pair or a sequence");
  reg_cfg.attach(reg);
  reg->add_option("--sequence", seq, "sequence directory (overrides data.sequence)");
  reg->add_option("--source", source, "source scan (.bin), pair mode");
  reg->add_option("--target", target, "target scan (.bin), pair mode");
  reg->add_option("-o,--out", out_path, "output pose file (sequence mode)");

  auto* train = app.add_subcommand("train", "unsupervised training");
  train_cfg.attach(train);
  train->add_option("--sequence", seq, "sequence directory (overrides data.sequence)");
  train->add_option("--run-dir", run_dir, "output directory")->required();

  auto* infer = app.add_subcommand("infer", "learned or hybrid odometry with a checkpoint");
  infer_cfg.attach(infer);
  infer->add_option("--sequence", seq, "sequence directory (overrides data.sequence)");
  infer->add_option("--checkpoint", ckpt, "checkpoint file")->required();
  infer->add_option("--mode", mode, "learned or hybrid");
  infer->add_option("-o,--out", out_path, "output pose file")->required();

  auto* eval = app.add_subcommand("eval", "KITTI segment errors between two pose files");
  eval->add_option("--est", est, "estimated poses")->required();
  eval->add_option("--gt", gt, "ground-truth poses")->required();
  eval->add_option("--lengths", lengths, "segment lengths in meters (default 100..800)")
      ->delimiter(',');
  eval->add_option("--stride", stride, "start-frame step");
  eval->add_option("--csv", csv, "also write the report as CSV");

  auto* synth = app.add_subcommand("synth", "generate a synthetic sequence");
  synth_cfg.attach(synth);
  synth->add_option("-o,--out", sa.out, "output directory")->required();
  synth->add_option("--frames", sa.frames, "number of scans");
  synth->add_option("--seed", sa.seed, "generator seed");
  synth->add_option("--speed", sa.speed, "mean speed (m/s)");
  synth->add_option("--noise", sa.noise, "scan noise sigma (m)");
  synth->add_option("--imu-rate", sa.imu_rate, "IMU rate (Hz)");
  synth->add_option("--heading", sa.heading, "heading oscillation amplitude (rad)");
  synth->add_flag("--crop", sa.crop, "crop scans to the configured projection window");

  auto* grad = app.add_subcommand("gradcheck", "finite-difference checks of every gradient");
  grad->add_option("--seeds", seeds, "random instances per suite");
  grad->add_option("--base-seed", base_seed, "first seed");

  auto* exp = app.add_subcommand("export-traj", "pose file to a 2D CSV for plotting");
  exp->add_option("--poses", poses, "pose file")->required();
  exp->add_option("-o,--out", out_path, "CSV output")->required();
  exp->add_option("--plane", plane, "xz (camera ground plane) or xy");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*pre) return cmd_preprocess(pre_cfg, seq, cache_dir, out);
    if (*reg) return cmd_register(reg_cfg, seq, source, target, out_path, out, err);
    if (*train) return cmd_train(train_cfg, seq, run_dir, out);
    if (*infer) return cmd_infer(infer_cfg, seq, ckpt, mode, out_path, out, err);
    if (*eval) return cmd_eval(est, gt, lengths, stride, csv, out);
    if (*synth) return cmd_synth(synth_cfg, sa, out);
    if (*grad) return cmd_gradcheck(seeds, base_seed, out);
    if (*exp) return cmd_export(poses, out_path, plane, out);
  } catch (const ConfigError& e) {
    err << "configuration error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const FormatError& e) {
    err << "format error: " << e.what() << '\n';
    return kExitData;
  } catch (const IoError& e) {
    err << "I/O error: " << e.what() << '\n';
    return kExitData;
  } catch (const ShapeError& e) {
    err << "shape error: " << e.what() << '\n';
    return kExitData;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitData;
  }
  return kExitUsage;
}

}  // namespace liodom
