#pragma once

#include <string>
#include <vector>

#include "liodom/nn/tensor.hpp"

namespace liodom::nn {

/// Single-layer LSTM, gate order (input, forget, candidate, output):
///   z = W_ih x_t + W_hh h_{t-1} + b
///   c_t = f * c_{t-1} + i * g,  h_t = o * tanh(c_t)
class Lstm {
 public:
  Lstm() = default;
  Lstm(int input, int hidden);

  int input_size() const { return input_; }
  int hidden_size() const { return hidden_; }

  struct Cache {
    RowMatrix x;                 // S x F
    std::vector<Vector> h, c;    // S + 1 entries, [0] is the initial state
    std::vector<Vector> gates;   // S entries of 4H activated gates
  };

  struct Output {
    RowMatrix hidden;  // S x H
    Vector final_hidden;
    Vector final_cell;
  };

  /// Uniform(+-1/sqrt(hidden)) for all parameters.
  void init(Rng& rng);

  /// Zero initial state when h0 / c0 are null.
  Output forward(const RowMatrix& sequence, Cache& cache, const Vector* h0 = nullptr,
                 const Vector* c0 = nullptr) const;

  /// Backpropagation through time. `d_hidden` (S x H, may be null) is the
  /// gradient on every hidden output; `d_final` the gradient on the last
  /// hidden state. Accumulates into `grad` and returns dL/dsequence.
  RowMatrix backward(const Cache& cache, const RowMatrix* d_hidden, const Vector& d_final,
                     Lstm& grad) const;

  void collect(const std::string& prefix, ParamList& out);

  Tensor w_ih;  // (4H, F)
  Tensor w_hh;  // (4H, H)
  Tensor bias;  // (4H)

 private:
  int input_ = 0;
  int hidden_ = 0;
};

}  // namespace liodom::nn
