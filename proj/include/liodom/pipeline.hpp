#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>

#include "liodom/dataset_io.hpp"
#include "liodom/kdtree.hpp"
#include "liodom/loss.hpp"
#include "liodom/nn/encoder.hpp"
#include "liodom/nn/heads.hpp"
#include "liodom/nn/lstm.hpp"
#include "liodom/preprocess.hpp"
#include "liodom/range_image.hpp"

namespace liodom {

/// How inertial data enters the estimate.
enum class ImuMode {
  InitialPose,    // LSTM branch predicts T^, current maps are remapped by it
  FeatureConcat,  // LSTM features join the map features; no remap
  None,
};

/// How map features reach the pose heads.
enum class HeadMode {
  TwoBranch,   // translation from vertex features, rotation from vertex + normal
  Merged,      // one head on vertex + normal features emits all six values
  VertexOnly,  // normal branch disabled
};

enum class Matching { Nearest, Pixel };

using nn::HeadType;

std::string to_string(ImuMode m);
std::string to_string(HeadMode m);
std::string to_string(HeadType t);
std::string to_string(Matching m);
/// Throw ConfigError on unknown names.
ImuMode parse_imu_mode(std::string_view s);
HeadMode parse_head_mode(std::string_view s);
HeadType parse_head_type(std::string_view s);
Matching parse_matching(std::string_view s);

struct ModelConfig {
  nn::EncoderConfig encoder;  // in_channels is always 6 (two stacked maps)
  int lstm_hidden = 64;
  int head_width = 256;
  ImuMode imu_mode = ImuMode::InitialPose;
  HeadMode head_mode = HeadMode::TwoBranch;
  HeadType head_type = HeadType::Attention;
  int imu_window = 15;            // rows S per IMU window
  double rotation_scale = 0.1;    // head output * scale = Euler angles (rad)
  double vertex_scale = 0.05;     // vertex coordinates are multiplied by this
  double accel_scale = 0.1;       // accelerometer input scaling (gravity kept)
  double gyro_scale = 1.0;

  /// Desk-scale network: channels 16/32/64, feature width 32.
  static ModelConfig desk();
};

/// A scan ready for estimation: maps for the network and pixel matching, the
/// preprocessed loss cloud and its search index.
struct Frame {
  VertexMap vertices;
  NormalMap normals;
  PreprocessedCloud cloud;
  std::shared_ptr<const KdIndex> index;  // null when the cloud is empty
  double time = 0.0;
};

Frame make_frame(const PointCloud& scan, const ProjectionConfig& proj,
                 const PreprocessParams& params, double time = 0.0);
/// Frame from an already preprocessed loss cloud (e.g. from the cache).
Frame make_frame(const PointCloud& scan, PreprocessedCloud cloud, const ProjectionConfig& proj,
                 double time = 0.0);

/// Consecutive frames k (last) and k+1 (current). The estimated pose maps
/// current-frame points into the last frame.
struct FramePair {
  std::shared_ptr<const Frame> last;
  std::shared_ptr<const Frame> current;
  std::optional<ImuWindow> imu;
};

struct PairEstimate {
  Pose pose;      // T = residual * initial
  Pose initial;   // T^ (identity unless imu mode is initial-pose)
  Pose residual;  // delta T from the heads
};

class OdometryModel {
 public:
  OdometryModel(const ModelConfig& cfg, std::uint64_t seed);

  const ModelConfig& config() const { return cfg_; }

  /// Parameters and normalization buffers in a fixed order with stable names.
  nn::ParamList parameters();

  /// Same architecture with every tensor zero, for gradient accumulation.
  OdometryModel zeros_like() const;

  /// Values recorded by estimate() for backward().
  struct Tape {
    PairEstimate estimate;
    bool imu_used = false;
    nn::Lstm::Cache gyro, accel;
    nn::Vector gyro_hidden, accel_hidden;
    nn::ResNetEncoder::Cache vertex, normal;
    nn::Vector vertex_features, normal_features;
    nn::PoseHead::Cache translation, rotation;
    nn::Vector translation_input, rotation_input;
  };

  /// T^ from the IMU branch alone: angular-velocity LSTM -> FC -> rotation,
  /// acceleration LSTM -> FC -> translation.
  Pose imu_initial_pose(const ImuWindow& window) const;

  /// In training mode the normalization statistics are updated. Throws
  /// ConfigError when the IMU mode needs a window the pair lacks.
  PairEstimate estimate(const FramePair& pair, const ProjectionConfig& proj, bool training,
                        Tape* tape = nullptr);

  /// Backpropagates dL/dT (rotation-matrix form) into `grad`. Remapping is
  /// treated as a constant of T^.
  void backward(const Tape& tape, const RigidGradient& dT, OdometryModel& grad) const;

 private:
  Pose imu_branch(const ImuWindow& window, nn::Lstm::Cache& gyro, nn::Lstm::Cache& accel,
                  nn::Vector& gyro_hidden, nn::Vector& accel_hidden) const;

  ModelConfig cfg_;
  nn::Lstm gyro_lstm_, accel_lstm_;
  nn::Linear gyro_fc_, accel_fc_;
  nn::ResNetEncoder vertex_encoder_, normal_encoder_;
  nn::PoseHead translation_head_, rotation_head_;  // rotation head unused when merged
};

/// Stacks the last and current maps into a (6, H, W) tensor; invalid pixels
/// are zero.
nn::Tensor stack_maps(const MapGrid& last, const MapGrid& current, double scale);

struct LossSettings {
  LossWeights weights;
  Matching matching = Matching::Nearest;
  double max_correspondence_distance = 1.0;
};

struct PairLoss {
  LossTerms terms;
  RigidGradient gradient;  // dL/dT with the matches frozen
  std::size_t matches = 0;
};

/// Moves the current frame by T, matches it against the last frame and
/// evaluates the combined loss. Nearest matching uses the preprocessed
/// clouds; pixel matching uses the maps. Throws NumericalError when nothing
/// matches.
PairLoss pair_loss(const FramePair& pair, const Pose& T, const LossSettings& settings,
                   const ProjectionConfig& proj);

}  // namespace liodom
