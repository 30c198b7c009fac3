#include "liodom/nn/tensor.hpp"

#include <cmath>
#include <functional>
#include <numeric>

#include "liodom/errors.hpp"

#if defined(__GLIBC__)
#include <malloc.h>
#endif

namespace liodom::nn {

namespace {

std::size_t product(const std::vector<int>& shape) {
  std::size_t n = 1;
  for (int d : shape) {
    if (d < 0) throw ShapeError("negative tensor dimension");
    n *= static_cast<std::size_t>(d);
  }
  return n;
}

}  // namespace

Tensor::Tensor(std::vector<int> shape, double fill)
    : shape_(std::move(shape)), data_(product(shape_), fill) {}

Tensor::Tensor(std::vector<int> shape, std::vector<double> values)
    : shape_(std::move(shape)), data_(values.begin(), values.end()) {
  if (data_.size() != product(shape_)) {
    throw ShapeError("tensor values do not match shape " + shape_string(shape_));
  }
}

Eigen::Map<RowMatrix> Tensor::matrix(Eigen::Index rows, Eigen::Index cols) {
  if (static_cast<std::size_t>(rows * cols) != data_.size()) {
    throw ShapeError("matrix view does not match tensor " + shape_string(shape_));
  }
  return {data_.data(), rows, cols};
}

Eigen::Map<const RowMatrix> Tensor::matrix(Eigen::Index rows, Eigen::Index cols) const {
  if (static_cast<std::size_t>(rows * cols) != data_.size()) {
    throw ShapeError("matrix view does not match tensor " + shape_string(shape_));
  }
  return {data_.data(), rows, cols};
}

void Tensor::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

bool Tensor::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

std::string shape_string(const std::vector<int>& shape) {
  std::string s = "(";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ", ";
    s += std::to_string(shape[i]);
  }
  return s + ")";
}

void init_uniform(Tensor& t, Rng& rng, double bound) {
  std::uniform_real_distribution<double> dist(-bound, bound);
  for (auto& v : t.values()) v = dist(rng);
}

void zero_all(const ParamList& params) {
  for (const auto& p : params) p.tensor->fill(0.0);
}

void tune_allocator() {
#if defined(__GLIBC__)
  mallopt(M_MMAP_THRESHOLD, 64 << 20);
  mallopt(M_TRIM_THRESHOLD, 256 << 20);
#endif
}

std::size_t parameter_count(const ParamList& params) {
  std::size_t n = 0;
  for (const auto& p : params) {
    if (p.trainable) n += p.tensor->size();
  }
  return n;
}

}  // namespace liodom::nn
