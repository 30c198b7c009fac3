#include "liodom/training.hpp"

#include <algorithm>
#include <numeric>

#include "liodom/errors.hpp"

namespace liodom {

Trainer::Trainer(OdometryModel& model, const TrainingConfig& cfg, const ProjectionConfig& proj)
    : model_(model), cfg_(cfg), proj_(proj), adam_(cfg.adam), rng_(cfg.seed) {
  if (cfg.batch_size < 1) throw ConfigError("training.batch_size must be >= 1");
}

EpochStats Trainer::train_epoch(const std::vector<FramePair>& data) {
  EpochStats stats;
  stats.epoch = epoch_;
  adam_.set_epoch(epoch_);
  stats.learning_rate = adam_.learning_rate();

  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  if (cfg_.shuffle) std::shuffle(order.begin(), order.end(), rng_);

  OdometryModel grad = model_.zeros_like();
  nn::ParamList params = model_.parameters();
  nn::ParamList grads = grad.parameters();
  OdometryModel::Tape tape;

  std::size_t used = 0;
  for (std::size_t start = 0; start < order.size(); start += cfg_.batch_size) {
    const std::size_t end = std::min(order.size(), start + cfg_.batch_size);
    nn::zero_all(grads);
    std::size_t valid = 0;
    for (std::size_t b = start; b < end; ++b) {
      const FramePair& pair = data[order[b]];
      const PairEstimate est = model_.estimate(pair, proj_, true, &tape);
      PairLoss pl;
      try {
        pl = pair_loss(pair, est.pose, cfg_.loss, proj_);
      } catch (const NumericalError&) {
        ++stats.skipped;
        continue;
      }
      model_.backward(tape, pl.gradient, grad);
      stats.mean_loss += pl.terms.total;
      stats.mean_point_to_plane += pl.terms.point_to_plane;
      stats.mean_plane_to_plane += pl.terms.plane_to_plane;
      stats.mean_matches += static_cast<double>(pl.matches);
      ++valid;
    }
    if (valid == 0) continue;
    used += valid;
    const double inv = 1.0 / static_cast<double>(valid);
    for (const auto& g : grads) g.tensor->flat() *= inv;
    adam_.step(params, grads);
    ++stats.steps;
  }
  stats.pairs = data.size();
  if (used > 0) {
    const double inv = 1.0 / static_cast<double>(used);
    stats.mean_loss *= inv;
    stats.mean_point_to_plane *= inv;
    stats.mean_plane_to_plane *= inv;
    stats.mean_matches *= inv;
  }
  ++epoch_;
  return stats;
}

double pose_error(const Pose& estimate, const Pose& truth) {
  return (estimate.t - truth.t).norm() +
         rotation_angle(estimate.rotation().transpose() * truth.rotation());
}

}  // namespace liodom
