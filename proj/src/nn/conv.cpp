#include "liodom/nn/conv.hpp"

#include <cmath>

#include "liodom/errors.hpp"

namespace liodom::nn {

Conv2d::Conv2d(int in_channels, int out_channels, int kernel, int stride, int pad)
    : weight({out_channels, in_channels, kernel, kernel}),
      in_(in_channels),
      out_(out_channels),
      k_(kernel),
      stride_(stride),
      pad_(pad) {}

void Conv2d::init(Rng& rng) {
  const double fan_in = static_cast<double>(in_ * k_ * k_);
  init_uniform(weight, rng, std::sqrt(6.0 / fan_in));
}

Tensor Conv2d::forward(const Tensor& x, Cache& cache) const {
  if (x.rank() != 3 || x.dim(0) != in_) {
    throw ShapeError("Conv2d: expected (" + std::to_string(in_) + ", H, W), got " +
                     shape_string(x.shape()));
  }
  const int H = x.dim(1), W = x.dim(2);
  const int OH = out_size(H), OW = out_size(W);
  if (OH < 1 || OW < 1) throw ShapeError("Conv2d: input smaller than kernel");
  cache.in_h = H;
  cache.in_w = W;
  cache.out_h = OH;
  cache.out_w = OW;
  cache.cols.setZero(static_cast<Eigen::Index>(in_) * k_ * k_, static_cast<Eigen::Index>(OH) * OW);
  const double* xd = x.data();
  for (int c = 0; c < in_; ++c) {
    for (int ky = 0; ky < k_; ++ky) {
      for (int kx = 0; kx < k_; ++kx) {
        const Eigen::Index row = (static_cast<Eigen::Index>(c) * k_ + ky) * k_ + kx;
        double* dst = cache.cols.row(row).data();
        for (int oy = 0; oy < OH; ++oy) {
          const int iy = oy * stride_ - pad_ + ky;
          if (iy < 0 || iy >= H) continue;
          for (int ox = 0; ox < OW; ++ox) {
            const int ix = ox * stride_ - pad_ + kx;
            if (ix < 0 || ix >= W) continue;
            dst[oy * OW + ox] = xd[(static_cast<std::size_t>(c) * H + iy) * W + ix];
          }
        }
      }
    }
  }
  Tensor y({out_, OH, OW});
  y.matrix(out_, static_cast<Eigen::Index>(OH) * OW).noalias() =
      weight.matrix(out_, static_cast<Eigen::Index>(in_) * k_ * k_) * cache.cols;
  return y;
}

Tensor Conv2d::backward(const Cache& cache, const Tensor& dy, Conv2d& grad) const {
  const int H = cache.in_h, W = cache.in_w, OH = cache.out_h, OW = cache.out_w;
  const Eigen::Index K = static_cast<Eigen::Index>(in_) * k_ * k_;
  const auto dY = dy.matrix(out_, static_cast<Eigen::Index>(OH) * OW);
  grad.weight.matrix(out_, K).noalias() += dY * cache.cols.transpose();
  const RowMatrix dcols = weight.matrix(out_, K).transpose() * dY;

  Tensor dx({in_, H, W});
  double* dxd = dx.data();
  for (int c = 0; c < in_; ++c) {
    for (int ky = 0; ky < k_; ++ky) {
      for (int kx = 0; kx < k_; ++kx) {
        const Eigen::Index row = (static_cast<Eigen::Index>(c) * k_ + ky) * k_ + kx;
        const double* src = dcols.row(row).data();
        for (int oy = 0; oy < OH; ++oy) {
          const int iy = oy * stride_ - pad_ + ky;
          if (iy < 0 || iy >= H) continue;
          for (int ox = 0; ox < OW; ++ox) {
            const int ix = ox * stride_ - pad_ + kx;
            if (ix < 0 || ix >= W) continue;
            dxd[(static_cast<std::size_t>(c) * H + iy) * W + ix] += src[oy * OW + ox];
          }
        }
      }
    }
  }
  return dx;
}

void Conv2d::collect(const std::string& prefix, ParamList& out) {
  out.push_back({prefix + "weight", &weight, true});
}

}  // namespace liodom::nn
