#include "liodom/nn/encoder.hpp"

#include "liodom/errors.hpp"

namespace liodom::nn {

BasicBlock::BasicBlock(int in_channels, int out_channels, int stride)
    : conv1_(in_channels, out_channels, 3, stride, 1),
      conv2_(out_channels, out_channels, 3, 1, 1),
      norm1_(out_channels),
      norm2_(out_channels) {
  if (stride != 1 || in_channels != out_channels) {
    proj_.emplace(in_channels, out_channels, 1, stride, 0);
    proj_norm_.emplace(out_channels);
  }
}

void BasicBlock::init(Rng& rng) {
  conv1_.init(rng);
  conv2_.init(rng);
  if (proj_) proj_->init(rng);
}

Tensor BasicBlock::forward(const Tensor& x, bool training, Cache& cache) {
  cache.pre1 = norm1_.forward(conv1_.forward(x, cache.conv1), training, cache.norm1);
  Tensor a = norm2_.forward(conv2_.forward(relu(cache.pre1), cache.conv2), training, cache.norm2);
  if (proj_) {
    const Tensor s = proj_norm_->forward(proj_->forward(x, cache.proj), training, cache.proj_norm);
    a.flat() += s.flat();
  } else {
    a.flat() += x.flat();
  }
  cache.sum = std::move(a);
  return relu(cache.sum);
}

Tensor BasicBlock::backward(const Cache& cache, const Tensor& dy, BasicBlock& grad) const {
  const Tensor dsum = relu_backward(cache.sum, dy);
  const Tensor dpre1 = relu_backward(
      cache.pre1,
      conv2_.backward(cache.conv2, norm2_.backward(cache.norm2, dsum, grad.norm2_), grad.conv2_));
  Tensor dx = conv1_.backward(cache.conv1, norm1_.backward(cache.norm1, dpre1, grad.norm1_),
                              grad.conv1_);
  if (proj_) {
    const Tensor ds = proj_->backward(
        cache.proj, proj_norm_->backward(cache.proj_norm, dsum, *grad.proj_norm_), *grad.proj_);
    dx.flat() += ds.flat();
  } else {
    dx.flat() += dsum.flat();
  }
  return dx;
}

void BasicBlock::collect(const std::string& prefix, ParamList& out) {
  conv1_.collect(prefix + "conv1.", out);
  norm1_.collect(prefix + "norm1.", out);
  conv2_.collect(prefix + "conv2.", out);
  norm2_.collect(prefix + "norm2.", out);
  if (proj_) {
    proj_->collect(prefix + "proj.", out);
    proj_norm_->collect(prefix + "proj_norm.", out);
  }
}

ResNetEncoder::ResNetEncoder(const EncoderConfig& cfg)
    : cfg_(cfg),
      stem_(cfg.in_channels, cfg.channels[0], 3, 1, 1),
      stem_norm_(cfg.channels[0]),
      fc_(cfg.channels[2], cfg.feature_width) {
  if (cfg.blocks_per_stage < 1) throw ShapeError("encoder needs >= 1 block per stage");
  int in = cfg.channels[0];
  for (int stage = 0; stage < 3; ++stage) {
    for (int b = 0; b < cfg.blocks_per_stage; ++b) {
      const int stride = (stage > 0 && b == 0) ? 2 : 1;
      blocks_.emplace_back(in, cfg.channels[stage], stride);
      in = cfg.channels[stage];
    }
  }
}

void ResNetEncoder::init(Rng& rng) {
  stem_.init(rng);
  for (auto& b : blocks_) b.init(rng);
  fc_.init(rng);
}

Vector ResNetEncoder::forward(const Tensor& x, bool training, Cache& cache) {
  if (x.rank() != 3 || x.dim(0) != cfg_.in_channels) {
    throw ShapeError("encoder: expected (" + std::to_string(cfg_.in_channels) +
                     ", H, W) input, got " + shape_string(x.shape()));
  }
  if (x.dim(1) < kMinSize || x.dim(2) < kMinSize) {
    throw ShapeError("encoder: map " + shape_string(x.shape()) + " below the downsampling floor " +
                     std::to_string(kMinSize) + "x" + std::to_string(kMinSize));
  }
  cache.stem_pre = stem_norm_.forward(stem_.forward(x, cache.stem), training, cache.stem_norm);
  Tensor h = relu(cache.stem_pre);
  cache.blocks.resize(blocks_.size());
  for (std::size_t i = 0; i < blocks_.size(); ++i) {
    h = blocks_[i].forward(h, training, cache.blocks[i]);
  }
  cache.last_shape = h.shape();
  const int C = h.dim(0);
  cache.pooled = h.matrix(C, static_cast<Eigen::Index>(h.size()) / C).rowwise().mean();
  return fc_.forward(cache.pooled);
}

Tensor ResNetEncoder::backward(const Cache& cache, const Vector& dfeat,
                               ResNetEncoder& grad) const {
  const Vector dpool = fc_.backward(cache.pooled, dfeat, grad.fc_);
  Tensor dh(cache.last_shape);
  const int C = dh.dim(0);
  const Eigen::Index HW = static_cast<Eigen::Index>(dh.size()) / C;
  dh.matrix(C, HW).colwise() = dpool / static_cast<double>(HW);
  for (std::size_t i = blocks_.size(); i-- > 0;) {
    dh = blocks_[i].backward(cache.blocks[i], dh, grad.blocks_[i]);
  }
  dh = relu_backward(cache.stem_pre, dh);
  return stem_.backward(cache.stem, stem_norm_.backward(cache.stem_norm, dh, grad.stem_norm_),
                        grad.stem_);
}

void ResNetEncoder::collect(const std::string& prefix, ParamList& out) {
  stem_.collect(prefix + "stem.", out);
  stem_norm_.collect(prefix + "stem_norm.", out);
  for (std::size_t i = 0; i < blocks_.size(); ++i) {
    blocks_[i].collect(prefix + "block" + std::to_string(i) + ".", out);
  }
  fc_.collect(prefix + "fc.", out);
}

}  // namespace liodom::nn
