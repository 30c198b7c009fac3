#include "liodom/nn/heads.hpp"

namespace liodom::nn {

GatedAttention::GatedAttention(int in, int out)
    : input_gate(in, out), candidate(in, out), output_gate(in, out) {}

void GatedAttention::init(Rng& rng) {
  input_gate.init(rng);
  candidate.init(rng);
  output_gate.init(rng);
}

Vector GatedAttention::forward(const Vector& x, Cache& cache) const {
  cache.x = x;
  cache.i = sigmoid(input_gate.forward(x));
  cache.g = tanh(candidate.forward(x));
  cache.o = sigmoid(output_gate.forward(x));
  cache.ig_tanh = tanh(cache.i.cwiseProduct(cache.g));
  return cache.o.cwiseProduct(cache.ig_tanh);
}

Vector GatedAttention::backward(const Cache& cache, const Vector& dy, GatedAttention& grad) const {
  const auto i = cache.i.array(), g = cache.g.array(), o = cache.o.array();
  const auto th = cache.ig_tanh.array();
  const Eigen::ArrayXd dig = dy.array() * o * (1.0 - th.square());
  const Vector dzo = (dy.array() * th * o * (1.0 - o)).matrix();
  const Vector dzi = (dig * g * i * (1.0 - i)).matrix();
  const Vector dzg = (dig * i * (1.0 - g.square())).matrix();
  return input_gate.backward(cache.x, dzi, grad.input_gate) +
         candidate.backward(cache.x, dzg, grad.candidate) +
         output_gate.backward(cache.x, dzo, grad.output_gate);
}

void GatedAttention::collect(const std::string& prefix, ParamList& out) {
  input_gate.collect(prefix + "i.", out);
  candidate.collect(prefix + "g.", out);
  output_gate.collect(prefix + "o.", out);
}

FcActivation::FcActivation(int in, int hidden, int out) : fc1(in, hidden), fc2(hidden, out) {}

void FcActivation::init(Rng& rng) {
  fc1.init(rng);
  fc2.init(rng);
}

Vector FcActivation::forward(const Vector& x, Cache& cache) const {
  cache.x = x;
  cache.h = tanh(fc1.forward(x));
  cache.y = tanh(fc2.forward(cache.h));
  return cache.y;
}

Vector FcActivation::backward(const Cache& cache, const Vector& dy, FcActivation& grad) const {
  const Vector dz2 = (dy.array() * (1.0 - cache.y.array().square())).matrix();
  const Vector dh = fc2.backward(cache.h, dz2, grad.fc2);
  const Vector dz1 = (dh.array() * (1.0 - cache.h.array().square())).matrix();
  return fc1.backward(cache.x, dz1, grad.fc1);
}

void FcActivation::collect(const std::string& prefix, ParamList& out) {
  fc1.collect(prefix + "fc1.", out);
  fc2.collect(prefix + "fc2.", out);
}

PoseHead::PoseHead(HeadType type, int in, int width, int outputs)
    : type_(type), out_(width, outputs) {
  if (type == HeadType::Attention) {
    attention_ = GatedAttention(in, width);
  } else {
    fc_ = FcActivation(in, width, width);
  }
}

void PoseHead::init(Rng& rng) {
  if (type_ == HeadType::Attention) {
    attention_.init(rng);
  } else {
    fc_.init(rng);
  }
  out_.zero();
}

Vector PoseHead::forward(const Vector& x, Cache& cache) const {
  cache.features = type_ == HeadType::Attention ? attention_.forward(x, cache.attention)
                                                : fc_.forward(x, cache.fc);
  return out_.forward(cache.features);
}

Vector PoseHead::backward(const Cache& cache, const Vector& dy, PoseHead& grad) const {
  const Vector df = out_.backward(cache.features, dy, grad.out_);
  return type_ == HeadType::Attention ? attention_.backward(cache.attention, df, grad.attention_)
                                      : fc_.backward(cache.fc, df, grad.fc_);
}

void PoseHead::collect(const std::string& prefix, ParamList& out) {
  if (type_ == HeadType::Attention) {
    attention_.collect(prefix + "attention.", out);
  } else {
    fc_.collect(prefix + "fc.", out);
  }
  out_.collect(prefix + "out.", out);
}

}  // namespace liodom::nn
