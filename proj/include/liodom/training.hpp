#pragma once

#include <cstdint>
#include <vector>

#include "liodom/nn/adam.hpp"
#include "liodom/pipeline.hpp"

namespace liodom {

struct TrainingConfig {
  int epochs = 100;
  int batch_size = 20;
  nn::AdamConfig adam;
  LossSettings loss;
  std::uint64_t seed = 1;  // shuffling
  bool shuffle = true;
  int checkpoint_every = 10;  // epochs; 0 disables
};

struct EpochStats {
  int epoch = 0;  // 0-based
  double learning_rate = 0.0;
  double mean_loss = 0.0;  // over pairs that produced matches, before their update
  double mean_point_to_plane = 0.0;
  double mean_plane_to_plane = 0.0;
  double mean_matches = 0.0;
  std::size_t pairs = 0;
  std::size_t skipped = 0;  // pairs without correspondences
  std::size_t steps = 0;    // optimizer updates
};

/// Unsupervised training: for each batch, estimate T per pair, match the
/// moved current cloud against the last one, backpropagate the combined loss
/// through T into the network (matches frozen), average over the pairs that
/// matched and take one Adam step.
class Trainer {
 public:
  Trainer(OdometryModel& model, const TrainingConfig& cfg, const ProjectionConfig& proj);

  EpochStats train_epoch(const std::vector<FramePair>& data);

  int epoch() const { return epoch_; }
  nn::Adam& optimizer() { return adam_; }

 private:
  OdometryModel& model_;
  TrainingConfig cfg_;
  ProjectionConfig proj_;
  nn::Adam adam_;
  nn::Rng rng_;
  int epoch_ = 0;
};

/// |t_est - t_gt| + angle(R_est^T R_gt): meters plus radians.
double pose_error(const Pose& estimate, const Pose& truth);

}  // namespace liodom
