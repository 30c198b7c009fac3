#include "liodom/nn/layers.hpp"

#include <cmath>

#include "liodom/errors.hpp"

namespace liodom::nn {

Vector sigmoid(const Vector& x) {
  return x.unaryExpr([](double v) { return sigmoid(v); });
}

Vector tanh(const Vector& x) { return x.array().tanh().matrix(); }

Linear::Linear(int in, int out) : weight({out, in}), bias({out}), in_(in), out_(out) {}

void Linear::init(Rng& rng) {
  init_uniform(weight, rng, 1.0 / std::sqrt(static_cast<double>(in_)));
  bias.fill(0.0);
}

void Linear::zero() {
  weight.fill(0.0);
  bias.fill(0.0);
}

Vector Linear::forward(const Vector& x) const {
  if (x.size() != in_) {
    throw ShapeError("Linear: expected " + std::to_string(in_) + " inputs, got " +
                     std::to_string(x.size()));
  }
  return weight.matrix(out_, in_) * x + bias.flat();
}

Vector Linear::backward(const Vector& x, const Vector& dy, Linear& grad) const {
  grad.weight.matrix(out_, in_).noalias() += dy * x.transpose();
  grad.bias.flat() += dy;
  return weight.matrix(out_, in_).transpose() * dy;
}

void Linear::collect(const std::string& prefix, ParamList& out) {
  out.push_back({prefix + "weight", &weight, true});
  out.push_back({prefix + "bias", &bias, true});
}

ChannelNorm::ChannelNorm(int channels)
    : gamma({channels}, 1.0),
      beta({channels}, 0.0),
      running_mean({channels}, 0.0),
      running_var({channels}, 1.0) {}

Tensor ChannelNorm::forward(const Tensor& x, bool training, Cache& cache) {
  const int C = gamma.dim(0);
  if (x.rank() != 3 || x.dim(0) != C) throw ShapeError("ChannelNorm: bad input shape");
  const Eigen::Index HW = static_cast<Eigen::Index>(x.size()) / C;
  const auto X = x.matrix(C, HW);
  if (training) {
    for (int c = 0; c < C; ++c) {
      const double mean = X.row(c).mean();
      const double var = (X.row(c).array() - mean).square().mean();
      running_mean[c] = (1.0 - momentum) * running_mean[c] + momentum * mean;
      running_var[c] = (1.0 - momentum) * running_var[c] + momentum * var;
    }
  }
  cache.xhat = Tensor(x.shape());
  Tensor y(x.shape());
  auto Xh = cache.xhat.matrix(C, HW);
  auto Y = y.matrix(C, HW);
  for (int c = 0; c < C; ++c) {
    const double inv = 1.0 / std::sqrt(running_var[c] + eps);
    Xh.row(c) = (X.row(c).array() - running_mean[c]) * inv;
    Y.row(c) = Xh.row(c).array() * gamma[c] + beta[c];
  }
  return y;
}

Tensor ChannelNorm::backward(const Cache& cache, const Tensor& dy, ChannelNorm& grad) const {
  const int C = gamma.dim(0);
  const Eigen::Index HW = static_cast<Eigen::Index>(dy.size()) / C;
  const auto dY = dy.matrix(C, HW);
  const auto Xh = cache.xhat.matrix(C, HW);
  Tensor dx(dy.shape());
  auto dX = dx.matrix(C, HW);
  for (int c = 0; c < C; ++c) {
    grad.gamma[c] += dY.row(c).dot(Xh.row(c));
    grad.beta[c] += dY.row(c).sum();
    dX.row(c) = dY.row(c) * (gamma[c] / std::sqrt(running_var[c] + eps));
  }
  return dx;
}

void ChannelNorm::collect(const std::string& prefix, ParamList& out) {
  out.push_back({prefix + "gamma", &gamma, true});
  out.push_back({prefix + "beta", &beta, true});
  out.push_back({prefix + "running_mean", &running_mean, false});
  out.push_back({prefix + "running_var", &running_var, false});
}

Tensor relu(const Tensor& x) {
  Tensor y(x.shape());
  y.flat() = x.flat().cwiseMax(0.0);
  return y;
}

Tensor relu_backward(const Tensor& x, const Tensor& dy) {
  Tensor dx(dy.shape());
  dx.flat() = (x.flat().array() > 0.0).select(dy.flat(), 0.0);
  return dx;
}

}  // namespace liodom::nn
