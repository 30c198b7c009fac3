#pragma once

#include <string>

#include "liodom/nn/layers.hpp"

namespace liodom::nn {

/// out = o * tanh(i * g), i = sigma(W_i x + b_i), g = tanh(W_g x + b_g),
/// o = sigma(W_o x + b_o); all products element-wise.
class GatedAttention {
 public:
  GatedAttention() = default;
  GatedAttention(int in, int out);

  struct Cache {
    Vector x, i, g, o, ig_tanh;
  };

  void init(Rng& rng);
  Vector forward(const Vector& x, Cache& cache) const;
  Vector backward(const Cache& cache, const Vector& dy, GatedAttention& grad) const;
  void collect(const std::string& prefix, ParamList& out);

  Linear input_gate, candidate, output_gate;
};

/// out = tanh(W_2 tanh(W_1 x + b_1) + b_2).
class FcActivation {
 public:
  FcActivation() = default;
  FcActivation(int in, int hidden, int out);

  struct Cache {
    Vector x, h, y;
  };

  void init(Rng& rng);
  Vector forward(const Vector& x, Cache& cache) const;
  Vector backward(const Cache& cache, const Vector& dy, FcActivation& grad) const;
  void collect(const std::string& prefix, ParamList& out);

  Linear fc1, fc2;
};

enum class HeadType { Attention, FcActivation };

/// Feature gating (attention or FC + activation) followed by a linear layer to
/// `outputs` values. The output layer starts at zero so an untrained head
/// emits 0.
class PoseHead {
 public:
  PoseHead() = default;
  PoseHead(HeadType type, int in, int width, int outputs = 3);

  struct Cache {
    GatedAttention::Cache attention;
    FcActivation::Cache fc;
    Vector features;
  };

  void init(Rng& rng);
  Vector forward(const Vector& x, Cache& cache) const;
  Vector backward(const Cache& cache, const Vector& dy, PoseHead& grad) const;
  void collect(const std::string& prefix, ParamList& out);

  HeadType type() const { return type_; }
  int outputs() const { return out_.out_features(); }

 private:
  HeadType type_ = HeadType::Attention;
  GatedAttention attention_;
  FcActivation fc_;
  Linear out_;
};

}  // namespace liodom::nn
