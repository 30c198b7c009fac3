#include "liodom/nn/gradcheck.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

#include "liodom/errors.hpp"
#include "liodom/loss.hpp"
#include "liodom/nn/conv.hpp"
#include "liodom/nn/encoder.hpp"
#include "liodom/nn/heads.hpp"
#include "liodom/nn/layers.hpp"
#include "liodom/nn/lstm.hpp"

namespace liodom::nn {

double compare_gradients(const std::function<double()>& objective, const ParamList& variables,
                         const ParamList& analytic, Rng& rng, const GradCheckOptions& opts,
                         std::size_t* checked) {
  if (variables.size() != analytic.size()) throw ShapeError("gradcheck: list size mismatch");
  double worst = 0.0;
  std::size_t total = 0;
  for (std::size_t k = 0; k < variables.size(); ++k) {
    Tensor& x = *variables[k].tensor;
    const Tensor& a = *analytic[k].tensor;
    if (!x.same_shape(a)) throw ShapeError("gradcheck: shape mismatch for " + variables[k].name);
    std::vector<std::size_t> coords(x.size());
    std::iota(coords.begin(), coords.end(), std::size_t{0});
    if (coords.size() > opts.max_coordinates) {
      std::shuffle(coords.begin(), coords.end(), rng);
      coords.resize(opts.max_coordinates);
    }
    double max_diff = 0.0, max_a = 0.0, max_n = 0.0;
    for (const std::size_t i : coords) {
      const double orig = x[i];
      x[i] = orig + opts.step;
      const double fp = objective();
      x[i] = orig - opts.step;
      const double fm = objective();
      x[i] = orig;
      const double numeric = (fp - fm) / (2.0 * opts.step);
      max_diff = std::max(max_diff, std::abs(a[i] - numeric));
      max_a = std::max(max_a, std::abs(a[i]));
      max_n = std::max(max_n, std::abs(numeric));
    }
    const double scale = std::max(max_a, max_n);
    worst = std::max(worst, scale > 1e-12 ? max_diff / scale : max_diff);
    total += coords.size();
  }
  if (checked) *checked = total;
  return worst;
}

namespace {

void randomize(const ParamList& params, Rng& rng, double bound = 0.5) {
  std::uniform_real_distribution<double> u(-bound, bound);
  std::uniform_real_distribution<double> var(0.5, 1.5);
  for (const auto& p : params) {
    const bool is_var = p.name.ends_with("running_var");
    for (auto& v : p.tensor->values()) v = is_var ? var(rng) : u(rng);
  }
}

Tensor random_tensor(std::vector<int> shape, Rng& rng, double bound = 1.0) {
  Tensor t(std::move(shape));
  init_uniform(t, rng, bound);
  return t;
}

double dot(const Tensor& a, const Tensor& b) { return a.flat().dot(b.flat()); }

// Trainable entries only; buffers are constants for the check.
ParamList trainable(const ParamList& all) {
  ParamList out;
  for (const auto& p : all) {
    if (p.trainable) out.push_back(p);
  }
  return out;
}

template <typename Module>
std::pair<ParamList, ParamList> param_pair(Module& m, Module& g) {
  ParamList pm, pg;
  m.collect("", pm);
  g.collect("", pg);
  zero_all(pg);
  return {pm, pg};
}

double fc_suite(std::uint64_t seed, const GradCheckOptions& opts, std::size_t* checked) {
  Rng rng(seed);
  Linear m(32, 16), g(32, 16);
  auto [pm, pg] = param_pair(m, g);
  randomize(pm, rng);
  Tensor x = random_tensor({32}, rng), w = random_tensor({16}, rng);
  const Vector y = m.forward(x.flat());
  (void)y;
  Tensor dx({32});
  dx.flat() = m.backward(x.flat(), w.flat(), g);
  pm.push_back({"x", &x, true});
  pg.push_back({"x", &dx, true});
  return compare_gradients([&] { return w.flat().dot(m.forward(x.flat())); }, pm, pg, rng, opts,
                           checked);
}

double lstm_suite(std::uint64_t seed, const GradCheckOptions& opts, std::size_t* checked) {
  Rng rng(seed);
  constexpr int S = 15, F = 6, H = 8;
  Lstm m(F, H), g(F, H);
  auto [pm, pg] = param_pair(m, g);
  randomize(pm, rng);
  Tensor x = random_tensor({S, F}, rng), wseq = random_tensor({S, H}, rng);
  Tensor wfin = random_tensor({H}, rng);
  auto objective = [&] {
    Lstm::Cache c;
    const auto out = m.forward(x.matrix(S, F), c);
    return (out.hidden.array() * wseq.matrix(S, H).array()).sum() +
           out.final_hidden.dot(wfin.flat());
  };
  Lstm::Cache cache;
  m.forward(x.matrix(S, F), cache);
  const RowMatrix dseq = wseq.matrix(S, H);
  Tensor dx({S, F});
  dx.matrix(S, F) = m.backward(cache, &dseq, wfin.flat(), g);
  pm.push_back({"x", &x, true});
  pg.push_back({"x", &dx, true});
  return compare_gradients(objective, pm, pg, rng, opts, checked);
}

double conv_suite(std::uint64_t seed, const GradCheckOptions& opts, std::size_t* checked) {
  Rng rng(seed);
  Conv2d m(3, 5, 3, 2, 1), g(3, 5, 3, 2, 1);
  auto [pm, pg] = param_pair(m, g);
  randomize(pm, rng);
  Tensor x = random_tensor({3, 7, 9}, rng);
  Conv2d::Cache cache;
  const Tensor y = m.forward(x, cache);
  const Tensor w = random_tensor(y.shape(), rng);
  Tensor dx = m.backward(cache, w, g);
  pm.push_back({"x", &x, true});
  pg.push_back({"x", &dx, true});
  return compare_gradients(
      [&] {
        Conv2d::Cache c;
        return dot(w, m.forward(x, c));
      },
      pm, pg, rng, opts, checked);
}

double norm_suite(std::uint64_t seed, const GradCheckOptions& opts, std::size_t* checked) {
  Rng rng(seed);
  ChannelNorm m(4), g(4);
  ParamList pm, pg;
  m.collect("", pm);
  g.collect("", pg);
  zero_all(pg);
  randomize(pm, rng);
  Tensor x = random_tensor({4, 5, 6}, rng), w = random_tensor({4, 5, 6}, rng);
  ChannelNorm::Cache cache;
  m.forward(x, false, cache);
  Tensor dx = m.backward(cache, w, g);
  pm = trainable(pm);
  pg = trainable(pg);
  pm.push_back({"x", &x, true});
  pg.push_back({"x", &dx, true});
  return compare_gradients(
      [&] {
        ChannelNorm::Cache c;
        return dot(w, m.forward(x, false, c));
      },
      pm, pg, rng, opts, checked);
}

double block_suite(std::uint64_t seed, const GradCheckOptions& opts, std::size_t* checked) {
  Rng rng(seed);
  BasicBlock m(4, 8, 2), g(4, 8, 2);
  ParamList pm, pg;
  m.collect("", pm);
  g.collect("", pg);
  zero_all(pg);
  randomize(pm, rng);
  Tensor x = random_tensor({4, 8, 16}, rng);
  BasicBlock::Cache cache;
  const Tensor y = m.forward(x, false, cache);
  const Tensor w = random_tensor(y.shape(), rng);
  Tensor dx = m.backward(cache, w, g);
  pm = trainable(pm);
  pg = trainable(pg);
  pm.push_back({"x", &x, true});
  pg.push_back({"x", &dx, true});
  return compare_gradients(
      [&] {
        BasicBlock::Cache c;
        return dot(w, m.forward(x, false, c));
      },
      pm, pg, rng, opts, checked);
}

double encoder_suite(std::uint64_t seed, const GradCheckOptions& opts, std::size_t* checked) {
  Rng rng(seed);
  EncoderConfig cfg;
  cfg.feature_width = 32;
  ResNetEncoder m(cfg), g(cfg);
  ParamList pm, pg;
  m.collect("", pm);
  g.collect("", pg);
  zero_all(pg);
  randomize(pm, rng);
  Tensor x = random_tensor({6, 8, 16}, rng), w = random_tensor({32}, rng);
  ResNetEncoder::Cache cache;
  m.forward(x, false, cache);
  Tensor dx = m.backward(cache, w.flat(), g);
  pm = trainable(pm);
  pg = trainable(pg);
  pm.push_back({"x", &x, true});
  pg.push_back({"x", &dx, true});
  return compare_gradients(
      [&] {
        ResNetEncoder::Cache c;
        return w.flat().dot(m.forward(x, false, c));
      },
      pm, pg, rng, opts, checked);
}

double attention_suite(std::uint64_t seed, const GradCheckOptions& opts, std::size_t* checked) {
  Rng rng(seed);
  GatedAttention m(32, 16), g(32, 16);
  auto [pm, pg] = param_pair(m, g);
  randomize(pm, rng);
  Tensor x = random_tensor({32}, rng), w = random_tensor({16}, rng);
  GatedAttention::Cache cache;
  m.forward(x.flat(), cache);
  Tensor dx({32});
  dx.flat() = m.backward(cache, w.flat(), g);
  pm.push_back({"x", &x, true});
  pg.push_back({"x", &dx, true});
  return compare_gradients(
      [&] {
        GatedAttention::Cache c;
        return w.flat().dot(m.forward(x.flat(), c));
      },
      pm, pg, rng, opts, checked);
}

double fc_activation_suite(std::uint64_t seed, const GradCheckOptions& opts,
                           std::size_t* checked) {
  Rng rng(seed);
  FcActivation m(32, 24, 16), g(32, 24, 16);
  auto [pm, pg] = param_pair(m, g);
  randomize(pm, rng);
  Tensor x = random_tensor({32}, rng), w = random_tensor({16}, rng);
  FcActivation::Cache cache;
  m.forward(x.flat(), cache);
  Tensor dx({32});
  dx.flat() = m.backward(cache, w.flat(), g);
  pm.push_back({"x", &x, true});
  pg.push_back({"x", &dx, true});
  return compare_gradients(
      [&] {
        FcActivation::Cache c;
        return w.flat().dot(m.forward(x.flat(), c));
      },
      pm, pg, rng, opts, checked);
}

double pose_head_suite(std::uint64_t seed, const GradCheckOptions& opts, std::size_t* checked) {
  Rng rng(seed);
  const HeadType type = seed % 2 ? HeadType::Attention : HeadType::FcActivation;
  const int outputs = seed % 3 ? 3 : 6;
  PoseHead m(type, 24, 16, outputs), g(type, 24, 16, outputs);
  auto [pm, pg] = param_pair(m, g);
  randomize(pm, rng);
  Tensor x = random_tensor({24}, rng), w = random_tensor({outputs}, rng);
  PoseHead::Cache cache;
  m.forward(x.flat(), cache);
  Tensor dx({24});
  dx.flat() = m.backward(cache, w.flat(), g);
  pm.push_back({"x", &x, true});
  pg.push_back({"x", &dx, true});
  return compare_gradients(
      [&] {
        PoseHead::Cache c;
        return w.flat().dot(m.forward(x.flat(), c));
      },
      pm, pg, rng, opts, checked);
}

// L = <W, (outer * inner).matrix()> through compose_backward and the Euler chain rule.
double compose_suite(std::uint64_t seed, const GradCheckOptions& opts, std::size_t* checked) {
  Rng rng(seed);
  Tensor po = random_tensor({6}, rng), pi = random_tensor({6}, rng);
  const Tensor w = random_tensor({16}, rng);
  const Mat4 W = Eigen::Map<const Eigen::Matrix<double, 4, 4, Eigen::RowMajor>>(w.data());
  auto objective = [&] {
    const Pose T = compose(Pose::from_vector(po.flat()), Pose::from_vector(pi.flat()));
    return (W.array() * T.matrix().array()).sum();
  };
  const Pose outer = Pose::from_vector(po.flat()), inner = Pose::from_vector(pi.flat());
  RigidGradient g;
  g.dR = W.topLeftCorner<3, 3>();
  g.dt = W.topRightCorner<3, 1>();
  const auto split = compose_backward(outer, inner, g);
  Tensor go({6}), gi({6});
  go.flat() = to_pose_vector_gradient(split.outer, outer.rpy);
  gi.flat() = to_pose_vector_gradient(split.inner, inner.rpy);
  return compare_gradients(objective, {{"outer", &po, true}, {"inner", &pi, true}},
                           {{"outer", &go, true}, {"inner", &gi, true}}, rng, opts, checked);
}

// Combined unsupervised loss with frozen pairs, differentiated w.r.t. the pose.
double loss_suite(std::uint64_t seed, const GradCheckOptions& opts, std::size_t* checked) {
  Rng rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::normal_distribution<double> noise(0.0, 0.05);
  const Pose truth = Pose::from_vector(
      (PoseVector() << 0.1 * u(rng), 0.1 * u(rng), 0.1 * u(rng), u(rng), u(rng), u(rng)).finished());
  PreprocessedCloud src;
  CorrespondenceSet C;
  for (std::size_t i = 0; i < 64; ++i) {
    const Vec3 p(5.0 * u(rng), 5.0 * u(rng), 2.0 * u(rng));
    const Vec3 n = Vec3(u(rng), u(rng), u(rng)).normalized();
    src.points.push_back(p);
    src.normals.push_back(n);
    Correspondence c;
    c.source_index = i;
    c.target_index = i;
    c.target_point = apply_to_point(truth, p) + Vec3(noise(rng), noise(rng), noise(rng));
    c.target_normal = (apply_to_normal(truth, n) + Vec3(noise(rng), noise(rng), noise(rng))).normalized();
    C.push_back(c);
  }
  const LossWeights weights{1.0, 0.1};
  Tensor p({6});
  init_uniform(p, rng, 0.2);
  Tensor grad({6});
  grad.flat() = loss_gradient(p.flat(), src, C, weights);
  return compare_gradients(
      [&] { return loss_at(Pose::from_vector(p.flat()), src, C, weights).total; },
      {{"pose", &p, true}}, {{"pose", &grad, true}}, rng, opts, checked);
}

}  // namespace

std::vector<NamedSuite> gradient_suites() {
  return {
      {"fc", fc_suite},
      {"lstm", lstm_suite},
      {"conv", conv_suite},
      {"channel_norm", norm_suite},
      {"residual_block", block_suite},
      {"encoder", encoder_suite},
      {"attention", attention_suite},
      {"fc_activation", fc_activation_suite},
      {"pose_head", pose_head_suite},
      {"pose_compose", compose_suite},
      {"loss", loss_suite},
  };
}

GradCheckResult run_suite(const NamedSuite& suite, int seeds, std::uint64_t base_seed,
                          const GradCheckOptions& opts) {
  GradCheckResult r;
  r.name = suite.name;
  r.seeds = seeds;
  const auto start = std::chrono::steady_clock::now();
  for (int s = 0; s < seeds; ++s) {
    std::size_t n = 0;
    r.max_relative_error =
        std::max(r.max_relative_error, suite.run(base_seed + static_cast<std::uint64_t>(s), opts, &n));
    r.coordinates += n;
  }
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return r;
}

std::vector<GradCheckResult> run_gradient_suites(int seeds, std::uint64_t base_seed,
                                                 const GradCheckOptions& opts) {
  std::vector<GradCheckResult> out;
  for (const auto& suite : gradient_suites()) out.push_back(run_suite(suite, seeds, base_seed, opts));
  return out;
}

}  // namespace liodom::nn
