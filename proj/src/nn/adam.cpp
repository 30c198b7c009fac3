#include "liodom/nn/adam.hpp"

#include <cmath>

#include "liodom/errors.hpp"

namespace liodom::nn {

double scheduled_learning_rate(const AdamConfig& cfg, int epoch) {
  const int drops = cfg.step_size > 0 ? epoch / cfg.step_size : 0;
  return cfg.learning_rate * std::pow(cfg.gamma, drops);
}

Adam::Adam(const AdamConfig& cfg) : cfg_(cfg) {}

void Adam::step(const ParamList& params, const ParamList& grads) {
  if (params.size() != grads.size()) throw ShapeError("Adam: parameter/gradient count mismatch");
  if (m_.empty()) {
    for (const auto& p : params) {
      m_.emplace_back(p.tensor->shape());
      v_.emplace_back(p.tensor->shape());
    }
  }
  if (m_.size() != params.size()) throw ShapeError("Adam: state does not match parameters");
  ++t_;
  const double lr = learning_rate();
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  for (std::size_t k = 0; k < params.size(); ++k) {
    if (!params[k].trainable) continue;
    Tensor& p = *params[k].tensor;
    const Tensor& g = *grads[k].tensor;
    if (!p.same_shape(g) || !p.same_shape(m_[k])) {
      throw ShapeError("Adam: shape mismatch for " + params[k].name);
    }
    auto m = m_[k].flat();
    auto v = v_[k].flat();
    auto w = p.flat();
    Vector grad = g.flat();
    if (!cfg_.decoupled_weight_decay) grad += cfg_.weight_decay * w;
    m = cfg_.beta1 * m + (1.0 - cfg_.beta1) * grad;
    v = cfg_.beta2 * v + (1.0 - cfg_.beta2) * grad.cwiseAbs2();
    const Vector update =
        ((m.array() / bc1) / ((v.array() / bc2).sqrt() + cfg_.epsilon)).matrix();
    if (cfg_.decoupled_weight_decay) w -= lr * cfg_.weight_decay * w;
    w -= lr * update;
  }
}

}  // namespace liodom::nn
