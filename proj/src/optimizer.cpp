#include "suvr/optimizer.hpp"

#include <cmath>
#include <string>

#include "suvr/errors.hpp"

namespace suvr {

OptimizerState OptimizerState::like(std::span<const std::span<double>> params, double mu,
                                    double base_lr) {
  OptimizerState state;
  state.mu = mu;
  state.base_lr = base_lr;
  for (auto p : params) state.velocity.emplace_back(p.size(), 0.0);
  return state;
}

void nesterov_step(std::span<double> params, std::span<const double> grads,
                   std::span<double> velocity, double mu, double lr) {
  if (params.size() != grads.size() || params.size() != velocity.size()) {
    throw DimensionMismatch("nesterov_step: parameter/gradient/velocity shapes differ");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    velocity[i] = mu * velocity[i] + grads[i];
    params[i] -= lr * (grads[i] + mu * velocity[i]);
  }
}

void nesterov_step(std::span<const std::span<double>> params,
                   std::span<const std::span<const double>> grads, OptimizerState& state,
                   double lr) {
  if (params.size() != grads.size() || params.size() != state.velocity.size()) {
    throw DimensionMismatch("nesterov_step: block count mismatch");
  }
  for (std::size_t b = 0; b < params.size(); ++b) {
    nesterov_step(params[b], grads[b], state.velocity[b], state.mu, lr);
  }
}

double lr_at_epoch(double base, int epoch) {
  if (!(base > 0.0)) {
    throw ConfigError("lr_at_epoch: base learning rate must be positive, got " +
                      std::to_string(base));
  }
  if (epoch < 0) throw ConfigError("lr_at_epoch: negative epoch");
  return base * std::pow(0.9, epoch / 40);
}

}  // namespace suvr
