#pragma once

#include "liodom/correspondence.hpp"
#include "liodom/geometry.hpp"

namespace liodom {

/// Balancing factors of the combined loss alpha * L_po2pl + lambda * L_pl2pl.
struct LossWeights {
  double alpha = 1.0;
  double lambda = 0.1;
};

struct LossTerms {
  double point_to_plane = 0.0;
  double plane_to_plane = 0.0;
  double total = 0.0;
};

/// Sum over matches of |n_target . (source - target)|. Throws NumericalError on
/// an empty set.
double point_to_plane_loss(const CorrespondenceSet& C);

/// Sum over matches of |n_source - n_target|^2. Throws NumericalError on an
/// empty set.
double plane_to_plane_loss(const CorrespondenceSet& C);

double total_loss(const CorrespondenceSet& C, const LossWeights& w);
LossTerms evaluate_loss(const CorrespondenceSet& C, const LossWeights& w);

/// Re-evaluates the loss with the pairing of C frozen and the untransformed
/// `source` moved by `pose`.
LossTerms loss_at(const Pose& pose, const PreprocessedCloud& source,
                  const CorrespondenceSet& C, const LossWeights& w);

/// dL/dR and dL/dt of loss_at. The absolute value uses subgradient 0 at an
/// exactly-zero residual.
RigidGradient loss_rigid_gradient(const Pose& pose, const PreprocessedCloud& source,
                                  const CorrespondenceSet& C, const LossWeights& w);

/// Gradient of loss_at with respect to the Euler pose vector p.
PoseVector loss_gradient(const PoseVector& p, const PreprocessedCloud& source,
                         const CorrespondenceSet& C, const LossWeights& w);

}  // namespace liodom
