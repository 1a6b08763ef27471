#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "suvr/numeric.hpp"

namespace suvr {

// Nesterov-momentum SGD state: one velocity buffer per parameter block.
struct OptimizerState {
  std::vector<Vec> velocity;
  double mu = 0.9;
  double base_lr = 0.03;
  int epoch = 0;

  static OptimizerState like(std::span<const std::span<double>> params, double mu,
                             double base_lr);
};

// Per parameter w with velocity b: b <- mu*b + g; w <- w - lr*(g + mu*b).
void nesterov_step(std::span<double> params, std::span<const double> grads,
                   std::span<double> velocity, double mu, double lr);

// Applies the step to every block.
void nesterov_step(std::span<const std::span<double>> params,
                   std::span<const std::span<const double>> grads, OptimizerState& state,
                   double lr);

// base * 0.9^floor(epoch / 40)
double lr_at_epoch(double base, int epoch);

}  // namespace suvr
