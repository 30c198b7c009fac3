#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "liodom/nn/conv.hpp"
#include "liodom/nn/layers.hpp"

namespace liodom::nn {

/// Two 3x3 convolutions with normalization; the shortcut is a 1x1 projection
/// when the stride or channel count changes.
class BasicBlock {
 public:
  BasicBlock() = default;
  BasicBlock(int in_channels, int out_channels, int stride);

  struct Cache {
    Conv2d::Cache conv1, conv2, proj;
    ChannelNorm::Cache norm1, norm2, proj_norm;
    Tensor pre1;  // norm1 output, before relu
    Tensor sum;   // residual sum, before relu
  };

  void init(Rng& rng);
  Tensor forward(const Tensor& x, bool training, Cache& cache);
  Tensor backward(const Cache& cache, const Tensor& dy, BasicBlock& grad) const;
  void collect(const std::string& prefix, ParamList& out);

  bool has_projection() const { return proj_.has_value(); }

 private:
  Conv2d conv1_, conv2_;
  ChannelNorm norm1_, norm2_;
  std::optional<Conv2d> proj_;
  std::optional<ChannelNorm> proj_norm_;
};

struct EncoderConfig {
  int in_channels = 6;
  std::array<int, 3> channels = {16, 32, 64};
  int blocks_per_stage = 2;
  int feature_width = 256;
};

/// Stem convolution, three residual stages (stride 2 entering stages 2 and 3),
/// global average pool and a fully connected layer to the feature width.
class ResNetEncoder {
 public:
  /// Smallest accepted map height and width.
  static constexpr int kMinSize = 4;

  ResNetEncoder() = default;
  explicit ResNetEncoder(const EncoderConfig& cfg);

  struct Cache {
    Conv2d::Cache stem;
    ChannelNorm::Cache stem_norm;
    Tensor stem_pre;
    std::vector<BasicBlock::Cache> blocks;
    std::vector<int> last_shape;
    Vector pooled;
  };

  void init(Rng& rng);
  /// Input (in_channels, H, W). Throws ShapeError below kMinSize.
  Vector forward(const Tensor& x, bool training, Cache& cache);
  Tensor backward(const Cache& cache, const Vector& dfeat, ResNetEncoder& grad) const;
  void collect(const std::string& prefix, ParamList& out);

  const EncoderConfig& config() const { return cfg_; }

 private:
  EncoderConfig cfg_;
  Conv2d stem_;
  ChannelNorm stem_norm_;
  std::vector<BasicBlock> blocks_;
  Linear fc_;
};

}  // namespace liodom::nn
