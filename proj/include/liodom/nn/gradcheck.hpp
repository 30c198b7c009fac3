#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "liodom/nn/tensor.hpp"

namespace liodom::nn {

struct GradCheckOptions {
  double step = 1e-6;                // central-difference step
  std::size_t max_coordinates = 40;  // random coordinates checked per tensor
};

/// Compares analytic gradients with central differences of `objective`.
/// `variables[k]` is perturbed in place; `analytic[k]` holds dObjective /
/// dvariables[k]. For each tensor the error is
///   max_i |a_i - n_i| / max(max_i |a_i|, max_i |n_i|)
/// over the checked coordinates (absolute when both are below 1e-12); the
/// maximum over tensors is returned.
double compare_gradients(const std::function<double()>& objective, const ParamList& variables,
                         const ParamList& analytic, Rng& rng, const GradCheckOptions& opts,
                         std::size_t* checked = nullptr);

struct GradCheckResult {
  std::string name;
  double max_relative_error = 0.0;
  std::size_t coordinates = 0;
  int seeds = 0;
  double seconds = 0.0;
};

/// One finite-difference suite: builds a random instance from `seed` and
/// returns its error as defined by compare_gradients.
using GradSuite =
    std::function<double(std::uint64_t seed, const GradCheckOptions& opts, std::size_t* checked)>;

struct NamedSuite {
  std::string name;
  GradSuite run;
};

/// fc, lstm (15 steps), conv, channel_norm, residual_block, encoder (6x8x16),
/// attention, fc_activation, pose_head, pose_compose, loss.
std::vector<NamedSuite> gradient_suites();

GradCheckResult run_suite(const NamedSuite& suite, int seeds, std::uint64_t base_seed,
                          const GradCheckOptions& opts = {});

std::vector<GradCheckResult> run_gradient_suites(int seeds = 10, std::uint64_t base_seed = 1,
                                                 const GradCheckOptions& opts = {});

}  // namespace liodom::nn
