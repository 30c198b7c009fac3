#pragma once

#include <cmath>
#include <string>

#include "liodom/nn/tensor.hpp"

namespace liodom::nn {

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }
Vector sigmoid(const Vector& x);
Vector tanh(const Vector& x);

/// y = W x + b with W of shape (out, in).
class Linear {
 public:
  Linear() = default;
  Linear(int in, int out);

  int in_features() const { return in_; }
  int out_features() const { return out_; }

  /// Uniform(+-1/sqrt(in)) weights, zero bias.
  void init(Rng& rng);
  void zero();

  Vector forward(const Vector& x) const;
  /// Accumulates dW, db into `grad`; returns dL/dx.
  Vector backward(const Vector& x, const Vector& dy, Linear& grad) const;

  void collect(const std::string& prefix, ParamList& out);

  Tensor weight;
  Tensor bias;

 private:
  int in_ = 0;
  int out_ = 0;
};

/// Per-channel affine normalization of a (C, H, W) map using running
/// statistics: y = gamma * (x - mean) / sqrt(var + eps) + beta. In training
/// mode the statistics are first moved toward the batch statistics with
/// `momentum`; backward treats them as constants.
class ChannelNorm {
 public:
  ChannelNorm() = default;
  explicit ChannelNorm(int channels);

  struct Cache {
    Tensor xhat;
  };

  Tensor forward(const Tensor& x, bool training, Cache& cache);
  Tensor backward(const Cache& cache, const Tensor& dy, ChannelNorm& grad) const;

  void collect(const std::string& prefix, ParamList& out);

  Tensor gamma, beta;
  Tensor running_mean, running_var;
  double momentum = 0.1;
  double eps = 1e-5;
};

Tensor relu(const Tensor& x);
/// dy masked by x > 0.
Tensor relu_backward(const Tensor& x, const Tensor& dy);

}  // namespace liodom::nn
