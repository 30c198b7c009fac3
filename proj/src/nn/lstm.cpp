#include "liodom/nn/lstm.hpp"

#include <cmath>

#include "liodom/errors.hpp"
#include "liodom/nn/layers.hpp"

namespace liodom::nn {

Lstm::Lstm(int input, int hidden)
    : w_ih({4 * hidden, input}),
      w_hh({4 * hidden, hidden}),
      bias({4 * hidden}),
      input_(input),
      hidden_(hidden) {}

void Lstm::init(Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(hidden_));
  init_uniform(w_ih, rng, bound);
  init_uniform(w_hh, rng, bound);
  init_uniform(bias, rng, bound);
}

Lstm::Output Lstm::forward(const RowMatrix& sequence, Cache& cache, const Vector* h0,
                           const Vector* c0) const {
  const Eigen::Index S = sequence.rows();
  const int H = hidden_;
  if (S < 1) throw ShapeError("Lstm: empty sequence");
  if (sequence.cols() != input_) throw ShapeError("Lstm: input width mismatch");
  const auto Wih = w_ih.matrix(4 * H, input_);
  const auto Whh = w_hh.matrix(4 * H, H);
  const auto b = bias.flat();

  cache.x = sequence;
  cache.h.assign(static_cast<std::size_t>(S) + 1, Vector::Zero(H));
  cache.c.assign(static_cast<std::size_t>(S) + 1, Vector::Zero(H));
  cache.gates.assign(static_cast<std::size_t>(S), Vector::Zero(4 * H));
  if (h0) cache.h[0] = *h0;
  if (c0) cache.c[0] = *c0;

  Output out;
  out.hidden.resize(S, H);
  for (Eigen::Index t = 0; t < S; ++t) {
    const auto k = static_cast<std::size_t>(t);
    const Vector z = Wih * sequence.row(t).transpose() + Whh * cache.h[k] + b;
    Vector& gt = cache.gates[k];
    gt.segment(0, H) = sigmoid(Vector(z.segment(0, H)));
    gt.segment(H, H) = sigmoid(Vector(z.segment(H, H)));
    gt.segment(2 * H, H) = z.segment(2 * H, H).array().tanh();
    gt.segment(3 * H, H) = sigmoid(Vector(z.segment(3 * H, H)));
    cache.c[k + 1] = gt.segment(H, H).cwiseProduct(cache.c[k]) +
                     gt.segment(0, H).cwiseProduct(gt.segment(2 * H, H));
    cache.h[k + 1] = gt.segment(3 * H, H).cwiseProduct(Vector(cache.c[k + 1].array().tanh()));
    out.hidden.row(t) = cache.h[k + 1].transpose();
  }
  out.final_hidden = cache.h.back();
  out.final_cell = cache.c.back();
  return out;
}

RowMatrix Lstm::backward(const Cache& cache, const RowMatrix* d_hidden, const Vector& d_final,
                         Lstm& grad) const {
  const Eigen::Index S = cache.x.rows();
  const int H = hidden_;
  const auto Wih = w_ih.matrix(4 * H, input_);
  const auto Whh = w_hh.matrix(4 * H, H);
  auto gWih = grad.w_ih.matrix(4 * H, input_);
  auto gWhh = grad.w_hh.matrix(4 * H, H);
  auto gb = grad.bias.flat();

  RowMatrix dx(S, input_);
  Vector dh = d_final;
  Vector dc = Vector::Zero(H);
  Vector dz(4 * H);
  for (Eigen::Index t = S - 1; t >= 0; --t) {
    const auto k = static_cast<std::size_t>(t);
    if (d_hidden) dh += d_hidden->row(t).transpose();
    const Vector& gt = cache.gates[k];
    const auto i = gt.segment(0, H).array();
    const auto f = gt.segment(H, H).array();
    const auto g = gt.segment(2 * H, H).array();
    const auto o = gt.segment(3 * H, H).array();
    const Eigen::ArrayXd tc = cache.c[k + 1].array().tanh();

    dc.array() += dh.array() * o * (1.0 - tc.square());
    dz.segment(0, H) = (dc.array() * g * i * (1.0 - i)).matrix();
    dz.segment(H, H) = (dc.array() * cache.c[k].array() * f * (1.0 - f)).matrix();
    dz.segment(2 * H, H) = (dc.array() * i * (1.0 - g.square())).matrix();
    dz.segment(3 * H, H) = (dh.array() * tc * o * (1.0 - o)).matrix();

    gWih.noalias() += dz * cache.x.row(t);
    gWhh.noalias() += dz * cache.h[k].transpose();
    gb += dz;
    dx.row(t) = (Wih.transpose() * dz).transpose();
    dh = Whh.transpose() * dz;
    dc = (dc.array() * f).matrix();
  }
  return dx;
}

void Lstm::collect(const std::string& prefix, ParamList& out) {
  out.push_back({prefix + "w_ih", &w_ih, true});
  out.push_back({prefix + "w_hh", &w_hh, true});
  out.push_back({prefix + "bias", &bias, true});
}

}  // namespace liodom::nn
