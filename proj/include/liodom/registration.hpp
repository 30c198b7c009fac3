#pragma once

#include <vector>

#include "liodom/errors.hpp"
#include "liodom/loss.hpp"
#include "liodom/point_cloud.hpp"

namespace liodom {

enum class StepPolicy {
  GaussNewton,      // squared point-to-plane residuals + lambda-weighted normal term
  GradientDescent,  // fixed-step descent on the reported loss
};

struct RegistrationOptions {
  int max_outer_iterations = 10;  // re-matching rounds
  int max_inner_iterations = 5;   // steps per matching
  double tolerance = 1e-6;        // on the 6-vector update norm
  StepPolicy policy = StepPolicy::GaussNewton;
  double descent_step = 1e-3;     // GradientDescent only
  int max_halvings = 12;
  double max_correspondence_distance = 1.0;
  LossWeights weights;
};

struct RegistrationDiagnostics {
  std::vector<double> loss_trace;         // per outer round, after its inner loop
  std::vector<std::size_t> match_counts;  // per outer round
  int outer_iterations = 0;
  int inner_iterations = 0;
  bool converged = false;
  LossTerms final_loss;   // under the final matching
  LossTerms init_loss;    // init pose under the final matching
  bool reverted_to_init = false;
};

struct RegistrationResult {
  Pose pose;
  RegistrationDiagnostics diagnostics;
};

/// Thrown when the initial pose yields no correspondences.
class RegistrationError : public NumericalError {
 public:
  RegistrationError(const std::string& what, const Pose& init)
      : NumericalError(what), init_pose(init) {}
  Pose init_pose;
};

/// ICP-style frame-to-frame registration minimizing the unsupervised loss.
/// Returns T with source mapped into target's frame (target ~ T * source).
RegistrationResult register_clouds(const PreprocessedCloud& source,
                                   const PreprocessedCloud& target, const Pose& init,
                                   const RegistrationOptions& opts = {});

}  // namespace liodom
