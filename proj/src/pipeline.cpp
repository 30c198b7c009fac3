#include "liodom/pipeline.hpp"

#include "liodom/errors.hpp"

namespace liodom {

namespace {

template <typename E>
E parse_enum(std::string_view s, std::initializer_list<std::pair<std::string_view, E>> names,
             std::string_view what) {
  std::string known;
  for (const auto& [name, value] : names) {
    if (s == name) return value;
    known += known.empty() ? "" : ", ";
    known += name;
  }
  throw ConfigError("unknown " + std::string(what) + " '" + std::string(s) + "' (expected " +
                    known + ")");
}

nn::Vector concat(std::initializer_list<const nn::Vector*> parts) {
  Eigen::Index n = 0;
  for (const auto* p : parts) n += p ? p->size() : 0;
  nn::Vector out(n);
  Eigen::Index at = 0;
  for (const auto* p : parts) {
    if (!p) continue;
    out.segment(at, p->size()) = *p;
    at += p->size();
  }
  return out;
}

// Adds consecutive slices of `grad` into the given accumulators (null skips).
void split_into(const nn::Vector& grad, std::initializer_list<nn::Vector*> parts) {
  Eigen::Index at = 0;
  for (auto* p : parts) {
    if (!p) continue;
    p->segment(0, p->size()) += grad.segment(at, p->size());
    at += p->size();
  }
  if (at != grad.size()) throw ShapeError("head input gradient does not match its parts");
}

nn::RowMatrix imu_columns(const ImuWindow& w, int first, double scale) {
  return w.rows.middleCols(first, 3) * scale;
}

}  // namespace

std::string to_string(ImuMode m) {
  switch (m) {
    case ImuMode::InitialPose: return "initial-pose";
    case ImuMode::FeatureConcat: return "feature-concat";
    case ImuMode::None: return "none";
  }
  return "?";
}

std::string to_string(HeadMode m) {
  switch (m) {
    case HeadMode::TwoBranch: return "two-branch";
    case HeadMode::Merged: return "merged";
    case HeadMode::VertexOnly: return "vertex-only";
  }
  return "?";
}

std::string to_string(HeadType t) {
  return t == HeadType::Attention ? "attention" : "fc-activation";
}

std::string to_string(Matching m) { return m == Matching::Nearest ? "nearest" : "pixel"; }

ImuMode parse_imu_mode(std::string_view s) {
  return parse_enum<ImuMode>(s,
                             {{"initial-pose", ImuMode::InitialPose},
                              {"feature-concat", ImuMode::FeatureConcat},
                              {"none", ImuMode::None}},
                             "imu mode");
}

HeadMode parse_head_mode(std::string_view s) {
  return parse_enum<HeadMode>(s,
                              {{"two-branch", HeadMode::TwoBranch},
                               {"merged", HeadMode::Merged},
                               {"vertex-only", HeadMode::VertexOnly}},
                              "head mode");
}

HeadType parse_head_type(std::string_view s) {
  return parse_enum<HeadType>(
      s, {{"attention", HeadType::Attention}, {"fc-activation", HeadType::FcActivation}},
      "head type");
}

Matching parse_matching(std::string_view s) {
  return parse_enum<Matching>(s, {{"nearest", Matching::Nearest}, {"pixel", Matching::Pixel}},
                              "matching");
}

ModelConfig ModelConfig::desk() {
  ModelConfig cfg;
  cfg.encoder.channels = {16, 32, 64};
  cfg.encoder.feature_width = 32;
  cfg.lstm_hidden = 16;
  cfg.head_width = 32;
  return cfg;
}

Frame make_frame(const PointCloud& scan, const ProjectionConfig& proj,
                 const PreprocessParams& params, double time) {
  return make_frame(scan, preprocess_scan(scan, params), proj, time);
}

Frame make_frame(const PointCloud& scan, PreprocessedCloud cloud, const ProjectionConfig& proj,
                 double time) {
  Frame f;
  f.vertices = project(scan, proj);
  f.normals = compute_normal_map(f.vertices);
  f.cloud = std::move(cloud);
  if (!f.cloud.empty()) f.index = std::make_shared<const KdIndex>(f.cloud.points);
  f.time = time;
  return f;
}

nn::Tensor stack_maps(const MapGrid& last, const MapGrid& current, double scale) {
  if (last.height != current.height || last.width != current.width) {
    throw ShapeError("stack_maps: map sizes differ");
  }
  const std::size_t HW = static_cast<std::size_t>(last.height) * last.width;
  nn::Tensor t({6, last.height, last.width});
  for (std::size_t k = 0; k < HW; ++k) {
    for (int c = 0; c < 3; ++c) {
      if (last.valid[k]) t[c * HW + k] = scale * last.values[k][c];
      if (current.valid[k]) t[(3 + c) * HW + k] = scale * current.values[k][c];
    }
  }
  return t;
}

OdometryModel::OdometryModel(const ModelConfig& cfg, std::uint64_t seed) : cfg_(cfg) {
  cfg_.encoder.in_channels = 6;
  const int F = cfg_.encoder.feature_width;
  const int H = cfg_.lstm_hidden;
  const int extra = cfg_.imu_mode == ImuMode::FeatureConcat ? H : 0;
  gyro_lstm_ = nn::Lstm(3, H);
  accel_lstm_ = nn::Lstm(3, H);
  gyro_fc_ = nn::Linear(H, 3);
  accel_fc_ = nn::Linear(H, 3);
  vertex_encoder_ = nn::ResNetEncoder(cfg_.encoder);
  if (cfg_.head_mode != HeadMode::VertexOnly) normal_encoder_ = nn::ResNetEncoder(cfg_.encoder);
  switch (cfg_.head_mode) {
    case HeadMode::TwoBranch:
      translation_head_ = nn::PoseHead(cfg_.head_type, F + extra, cfg_.head_width);
      rotation_head_ = nn::PoseHead(cfg_.head_type, 2 * F + extra, cfg_.head_width);
      break;
    case HeadMode::Merged:
      translation_head_ = nn::PoseHead(cfg_.head_type, 2 * F + 2 * extra, cfg_.head_width, 6);
      break;
    case HeadMode::VertexOnly:
      translation_head_ = nn::PoseHead(cfg_.head_type, F + extra, cfg_.head_width);
      rotation_head_ = nn::PoseHead(cfg_.head_type, F + extra, cfg_.head_width);
      break;
  }

  nn::Rng rng(seed);
  gyro_lstm_.init(rng);
  accel_lstm_.init(rng);
  gyro_fc_.zero();
  accel_fc_.zero();
  vertex_encoder_.init(rng);
  if (cfg_.head_mode != HeadMode::VertexOnly) normal_encoder_.init(rng);
  translation_head_.init(rng);
  if (cfg_.head_mode != HeadMode::Merged) rotation_head_.init(rng);
}

nn::ParamList OdometryModel::parameters() {
  nn::ParamList out;
  if (cfg_.imu_mode != ImuMode::None) {
    gyro_lstm_.collect("imu.gyro_lstm.", out);
    accel_lstm_.collect("imu.accel_lstm.", out);
  }
  if (cfg_.imu_mode == ImuMode::InitialPose) {
    gyro_fc_.collect("imu.gyro_fc.", out);
    accel_fc_.collect("imu.accel_fc.", out);
  }
  vertex_encoder_.collect("vertex_encoder.", out);
  if (cfg_.head_mode != HeadMode::VertexOnly) normal_encoder_.collect("normal_encoder.", out);
  if (cfg_.head_mode == HeadMode::Merged) {
    translation_head_.collect("pose_head.", out);
  } else {
    translation_head_.collect("translation_head.", out);
    rotation_head_.collect("rotation_head.", out);
  }
  return out;
}

OdometryModel OdometryModel::zeros_like() const {
  OdometryModel g = *this;
  nn::zero_all(g.parameters());
  return g;
}

Pose OdometryModel::imu_branch(const ImuWindow& window, nn::Lstm::Cache& gyro,
                               nn::Lstm::Cache& accel, nn::Vector& gyro_hidden,
                               nn::Vector& accel_hidden) const {
  if (window.rows.rows() != cfg_.imu_window) {
    throw ShapeError("IMU window has " + std::to_string(window.rows.rows()) + " rows, expected " +
                     std::to_string(cfg_.imu_window));
  }
  gyro_hidden = gyro_lstm_.forward(imu_columns(window, 3, cfg_.gyro_scale), gyro).final_hidden;
  accel_hidden = accel_lstm_.forward(imu_columns(window, 0, cfg_.accel_scale), accel).final_hidden;
  Pose p;
  p.rpy = cfg_.rotation_scale * gyro_fc_.forward(gyro_hidden);
  p.t = accel_fc_.forward(accel_hidden);
  return p;
}

Pose OdometryModel::imu_initial_pose(const ImuWindow& window) const {
  nn::Lstm::Cache g, a;
  nn::Vector hg, ha;
  return imu_branch(window, g, a, hg, ha);
}

PairEstimate OdometryModel::estimate(const FramePair& pair, const ProjectionConfig& proj,
                                     bool training, Tape* tape) {
  Tape local;
  Tape& tp = tape ? *tape : local;
  tp = Tape{};
  if (!pair.last || !pair.current) throw std::invalid_argument("estimate: incomplete frame pair");
  const Frame& last = *pair.last;
  const Frame& cur = *pair.current;

  Pose initial = Pose::identity();
  if (cfg_.imu_mode != ImuMode::None) {
    if (!pair.imu) {
      throw ConfigError("imu mode '" + to_string(cfg_.imu_mode) +
                        "' needs IMU windows; use imu mode 'none' for sequences without IMU");
    }
    const Pose imu_pose = imu_branch(*pair.imu, tp.gyro, tp.accel, tp.gyro_hidden, tp.accel_hidden);
    tp.imu_used = true;
    if (cfg_.imu_mode == ImuMode::InitialPose) initial = imu_pose;
  }

  const VertexMap* cur_v = &cur.vertices;
  const NormalMap* cur_n = &cur.normals;
  RemappedMaps remapped;
  if (cfg_.imu_mode == ImuMode::InitialPose) {
    remapped = remap(cur.vertices, cur.normals, initial, proj);
    cur_v = &remapped.vertices;
    cur_n = &remapped.normals;
  }

  tp.vertex_features =
      vertex_encoder_.forward(stack_maps(last.vertices, *cur_v, cfg_.vertex_scale), training, tp.vertex);
  const bool use_normals = cfg_.head_mode != HeadMode::VertexOnly;
  if (use_normals) {
    tp.normal_features =
        normal_encoder_.forward(stack_maps(last.normals, *cur_n, 1.0), training, tp.normal);
  }
  const bool concat_imu = cfg_.imu_mode == ImuMode::FeatureConcat;
  const nn::Vector* fv = &tp.vertex_features;
  const nn::Vector* fn = use_normals ? &tp.normal_features : nullptr;
  const nn::Vector* ha = concat_imu ? &tp.accel_hidden : nullptr;
  const nn::Vector* hg = concat_imu ? &tp.gyro_hidden : nullptr;

  Vec3 q, t;
  if (cfg_.head_mode == HeadMode::Merged) {
    tp.translation_input = concat({fv, fn, ha, hg});
    const nn::Vector out = translation_head_.forward(tp.translation_input, tp.translation);
    q = out.head<3>();
    t = out.tail<3>();
  } else {
    tp.translation_input = concat({fv, ha});
    tp.rotation_input = concat({fv, fn, hg});
    t = translation_head_.forward(tp.translation_input, tp.translation);
    q = rotation_head_.forward(tp.rotation_input, tp.rotation);
  }

  PairEstimate& est = tp.estimate;
  est.initial = initial;
  est.residual.rpy = cfg_.rotation_scale * q;
  est.residual.t = t;
  est.pose = compose(est.residual, est.initial);
  return est;
}

void OdometryModel::backward(const Tape& tape, const RigidGradient& dT,
                             OdometryModel& grad) const {
  const PairEstimate& est = tape.estimate;
  const auto split = compose_backward(est.residual, est.initial, dT);
  const PoseVector dres = to_pose_vector_gradient(split.outer, est.residual.rpy);
  const Vec3 dq = cfg_.rotation_scale * dres.head<3>();
  const Vec3 dt = dres.tail<3>();

  const int H = cfg_.lstm_hidden;
  const bool use_normals = cfg_.head_mode != HeadMode::VertexOnly;
  const bool concat_imu = cfg_.imu_mode == ImuMode::FeatureConcat;
  nn::Vector dfv = nn::Vector::Zero(tape.vertex_features.size());
  nn::Vector dfn = nn::Vector::Zero(tape.normal_features.size());
  nn::Vector dha = nn::Vector::Zero(H), dhg = nn::Vector::Zero(H);
  nn::Vector* pfn = use_normals ? &dfn : nullptr;
  nn::Vector* pha = concat_imu ? &dha : nullptr;
  nn::Vector* phg = concat_imu ? &dhg : nullptr;

  if (cfg_.head_mode == HeadMode::Merged) {
    nn::Vector dout(6);
    dout << dq, dt;
    split_into(translation_head_.backward(tape.translation, dout, grad.translation_head_),
               {&dfv, pfn, pha, phg});
  } else {
    split_into(translation_head_.backward(tape.translation, dt, grad.translation_head_),
               {&dfv, pha});
    split_into(rotation_head_.backward(tape.rotation, dq, grad.rotation_head_), {&dfv, pfn, phg});
  }
  vertex_encoder_.backward(tape.vertex, dfv, grad.vertex_encoder_);
  if (use_normals) normal_encoder_.backward(tape.normal, dfn, grad.normal_encoder_);

  if (cfg_.imu_mode == ImuMode::InitialPose) {
    const PoseVector dinit = to_pose_vector_gradient(split.inner, est.initial.rpy);
    const nn::Vector dgyro_out = cfg_.rotation_scale * dinit.head<3>();
    const nn::Vector daccel_out = dinit.tail<3>();
    dhg += gyro_fc_.backward(tape.gyro_hidden, dgyro_out, grad.gyro_fc_);
    dha += accel_fc_.backward(tape.accel_hidden, daccel_out, grad.accel_fc_);
  }
  if (tape.imu_used) {
    gyro_lstm_.backward(tape.gyro, nullptr, dhg, grad.gyro_lstm_);
    accel_lstm_.backward(tape.accel, nullptr, dha, grad.accel_lstm_);
  }
}

PairLoss pair_loss(const FramePair& pair, const Pose& T, const LossSettings& settings,
                   const ProjectionConfig& proj) {
  const Frame& last = *pair.last;
  const Frame& cur = *pair.current;
  PairLoss out;
  CorrespondenceSet C;
  if (settings.matching == Matching::Nearest) {
    if (!last.index || cur.cloud.empty()) {
      throw NumericalError("pair_loss: empty preprocessed cloud");
    }
    C = match_nearest(transform_cloud(cur.cloud, T), *last.index, last.cloud,
                      settings.max_correspondence_distance);
    if (C.empty()) throw NumericalError("pair_loss: no correspondences");
    out.terms = evaluate_loss(C, settings.weights);
    out.gradient = loss_rigid_gradient(T, cur.cloud, C, settings.weights);
  } else {
    const RemappedMaps moved = remap(cur.vertices, cur.normals, T, proj);
    C = match_pixel(last.vertices, moved.vertices, last.normals, moved.normals);
    if (C.empty()) throw NumericalError("pair_loss: no pixel correspondences");
    PreprocessedCloud source;
    source.points = cur.vertices.values;
    source.normals = cur.normals.values;
    out.terms = evaluate_loss(C, settings.weights);
    out.gradient = loss_rigid_gradient(T, source, C, settings.weights);
  }
  out.matches = C.size();
  return out;
}

}  // namespace liodom
