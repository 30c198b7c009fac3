#pragma once

#include <string>

#include "liodom/nn/tensor.hpp"

namespace liodom::nn {

/// 2D convolution without bias over a (C, H, W) map, zero padding.
/// Output size floor((H + 2 pad - k) / stride) + 1.
class Conv2d {
 public:
  Conv2d() = default;
  Conv2d(int in_channels, int out_channels, int kernel, int stride, int pad);

  struct Cache {
    RowMatrix cols;  // (C k k) x (OH OW)
    int in_h = 0, in_w = 0, out_h = 0, out_w = 0;
  };

  /// He-uniform initialization.
  void init(Rng& rng);

  Tensor forward(const Tensor& x, Cache& cache) const;
  Tensor backward(const Cache& cache, const Tensor& dy, Conv2d& grad) const;

  void collect(const std::string& prefix, ParamList& out);

  int in_channels() const { return in_; }
  int out_channels() const { return out_; }
  int out_size(int n) const { return (n + 2 * pad_ - k_) / stride_ + 1; }

  Tensor weight;  // (out, in, k, k)

 private:
  int in_ = 0, out_ = 0, k_ = 1, stride_ = 1, pad_ = 0;
};

}  // namespace liodom::nn
