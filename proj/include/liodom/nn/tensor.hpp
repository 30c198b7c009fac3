#pragma once

#include <cstddef>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace liodom::nn {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;
// Eigen's vectorized reductions peel scalars up to the first aligned address,
// so results depend on where a buffer starts; fixed alignment keeps runs
// bit-reproducible.
using Storage = std::vector<double, Eigen::aligned_allocator<double>>;

/// Dense row-major array of doubles with a shape.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<int> shape, double fill = 0.0);
  Tensor(std::vector<int> shape, std::vector<double> values);

  const std::vector<int>& shape() const { return shape_; }
  int dim(std::size_t i) const { return shape_.at(i); }
  std::size_t rank() const { return shape_.size(); }
  std::size_t size() const { return data_.size(); }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  Storage& values() { return data_; }
  const Storage& values() const { return data_; }
  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  Eigen::Map<Vector> flat() { return {data_.data(), static_cast<Eigen::Index>(data_.size())}; }
  Eigen::Map<const Vector> flat() const {
    return {data_.data(), static_cast<Eigen::Index>(data_.size())};
  }
  /// Row-major matrix view; rows * cols must equal size().
  Eigen::Map<RowMatrix> matrix(Eigen::Index rows, Eigen::Index cols);
  Eigen::Map<const RowMatrix> matrix(Eigen::Index rows, Eigen::Index cols) const;

  void fill(double v);
  bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }
  bool all_finite() const;

 private:
  std::vector<int> shape_;
  Storage data_;
};

std::string shape_string(const std::vector<int>& shape);

/// Named view of a parameter or buffer held by a module. Buffers (running
/// statistics) are saved in checkpoints but skipped by the optimizer.
struct ParamRef {
  std::string name;
  Tensor* tensor = nullptr;
  bool trainable = true;
};

using ParamList = std::vector<ParamRef>;

using Rng = std::mt19937_64;

/// Uniform(-bound, bound) fill.
void init_uniform(Tensor& t, Rng& rng, double bound);

/// Fills every tensor (parameters and buffers) with zero, e.g. to turn a copy
/// of a module into a gradient accumulator.
void zero_all(const ParamList& params);

/// Raises the glibc mmap/trim thresholds so the per-layer scratch buffers of
/// a forward/backward pass are recycled instead of being returned to the OS
/// on every free. No-op elsewhere. Call once at program start.
void tune_allocator();

/// Number of trainable scalars.
std::size_t parameter_count(const ParamList& params);

}  // namespace liodom::nn
