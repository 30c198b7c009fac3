#pragma once

#include <vector>

#include "liodom/nn/tensor.hpp"

namespace liodom::nn {

struct AdamConfig {
  double learning_rate = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.99;
  double epsilon = 1e-8;
  double weight_decay = 1e-5;
  bool decoupled_weight_decay = true;  // false: decay folded into the gradient
  int step_size = 20;                  // epochs between learning-rate drops
  double gamma = 0.5;
};

/// learning_rate * gamma^floor(epoch / step_size), epochs counted from 0.
double scheduled_learning_rate(const AdamConfig& cfg, int epoch);

class Adam {
 public:
  explicit Adam(const AdamConfig& cfg = {});

  /// Updates every trainable tensor in `params` from the matching entry of
  /// `grads` (same order and shapes). State is created on the first call.
  void step(const ParamList& params, const ParamList& grads);

  void set_epoch(int epoch) { epoch_ = epoch; }
  double learning_rate() const { return scheduled_learning_rate(cfg_, epoch_); }
  long steps() const { return t_; }
  const AdamConfig& config() const { return cfg_; }

 private:
  AdamConfig cfg_;
  int epoch_ = 0;
  long t_ = 0;
  std::vector<Tensor> m_, v_;
};

}  // namespace liodom::nn
