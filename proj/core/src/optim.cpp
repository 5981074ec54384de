#include "asta3d/optim.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace asta3d {

double StepDecay::at(std::uint64_t completed_steps) const {
  if (period == 0) return initial;
  return initial * std::pow(factor, static_cast<double>(completed_steps / period));
}

AdamState make_adam_state(std::span<const Parameter> params, const AdamOptions& options) {
  if (!(options.schedule.initial > 0.0)) throw std::invalid_argument("learning rate must be positive");
  if (!(options.schedule.factor > 0.0 && options.schedule.factor <= 1.0)) {
    throw std::invalid_argument("decay factor must lie in (0, 1]");
  }
  AdamState state;
  state.options = options;
  state.learning_rate = options.schedule.at(0);
  for (const auto& p : params) {
    state.first_moment.emplace_back(p.tensor.numel(), 0.0);
    state.second_moment.emplace_back(p.tensor.numel(), 0.0);
  }
  return state;
}

void adam_step(std::span<Parameter> params, AdamState& state) {
  if (params.size() != state.first_moment.size()) {
    throw std::invalid_argument("adam_step: parameter list does not match optimizer state");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (!params[i].tensor.has_grad()) {
      throw std::invalid_argument("adam_step: parameter '" + params[i].name + "' has no gradient");
    }
    if (state.first_moment[i].size() != params[i].tensor.numel()) {
      throw std::invalid_argument("adam_step: moment shape mismatch for '" + params[i].name + "'");
    }
  }

  const auto& opt = state.options;
  const double lr = opt.schedule.at(state.step_count);
  state.step_count += 1;
  const double t = static_cast<double>(state.step_count);
  const double correction1 = 1.0 - std::pow(opt.beta1, t);
  const double correction2 = 1.0 - std::pow(opt.beta2, t);

  for (std::size_t i = 0; i < params.size(); ++i) {
    auto value = params[i].tensor.mutable_data();
    auto grad = params[i].tensor.grad();
    auto& m = state.first_moment[i];
    auto& v = state.second_moment[i];
    for (std::size_t j = 0; j < value.size(); ++j) {
      m[j] = opt.beta1 * m[j] + (1.0 - opt.beta1) * grad[j];
      v[j] = opt.beta2 * v[j] + (1.0 - opt.beta2) * grad[j] * grad[j];
      const double m_hat = m[j] / correction1;
      const double v_hat = v[j] / correction2;
      value[j] -= lr * m_hat / (std::sqrt(v_hat) + opt.epsilon);
    }
  }
  state.learning_rate = opt.schedule.at(state.step_count);
}

}  // namespace asta3d
