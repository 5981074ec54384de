#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "asta3d/nn.hpp"

namespace asta3d {

/// Step-decay learning-rate schedule: lr = initial * factor^floor(step / period).
struct StepDecay {
  double initial = 1e-3;
  double factor = 0.7;
  std::uint64_t period = 200000;

  double at(std::uint64_t completed_steps) const;
};

struct AdamOptions {
  StepDecay schedule;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  std::vector<std::vector<double>> first_moment;
  std::vector<std::vector<double>> second_moment;
  std::uint64_t step_count = 0;
  double learning_rate = 0.0;  // rate that the next update will use
  AdamOptions options;
};

AdamState make_adam_state(std::span<const Parameter> params, const AdamOptions& options);

/// One bias-corrected Adam update. Every parameter must carry a gradient;
/// otherwise std::invalid_argument names the parameter and nothing is modified.
void adam_step(std::span<Parameter> params, AdamState& state);

}  // namespace asta3d
