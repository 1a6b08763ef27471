#pragma once

#include <cstddef>
#include <span>

#include "suvr/memory_bank.hpp"
#include "suvr/numeric.hpp"

namespace suvr {

// Per-instance loss split into its three summands plus the full softmax over
// the bank; total == instance + positive + negative.
struct LossBreakdown {
  double instance_term = 0.0;
  double positive_term = 0.0;
  double negative_term = 0.0;
  double total = 0.0;
  Vec probabilities;  // length n
};

// P(. | v): softmax over bank similarities at temperature tau.
Vec instance_probabilities(const MemoryBank& bank, std::span<const double> v, double tau,
                           kernels::Exec exec = kernels::Exec::parallel);

// -log p_i  -  sum_pos log p_j  -  sum_neg log(1 - min(p_c, 1 - 1e-7)).
LossBreakdown suvr_loss(const MemoryBank& bank, std::span<const double> v,
                        std::size_t query, std::span<const std::size_t> positives,
                        std::span<const std::size_t> negatives, double tau,
                        kernels::Exec exec = kernels::Exec::parallel);

// d(total)/dv. Memory rows are constants; only v receives gradient.
Vec loss_gradient(const MemoryBank& bank, std::span<const double> v, std::size_t query,
                  std::span<const std::size_t> positives,
                  std::span<const std::size_t> negatives, double tau,
                  kernels::Exec exec = kernels::Exec::parallel);

// Loss and gradient off one softmax evaluation; what the trainer calls.
struct LossWithGradient {
  double instance_term = 0.0;
  double positive_term = 0.0;
  double negative_term = 0.0;
  double total = 0.0;
  Vec gradient;
};
LossWithGradient loss_with_gradient(const MemoryBank& bank, std::span<const double> v,
                                    std::size_t query,
                                    std::span<const std::size_t> positives,
                                    std::span<const std::size_t> negatives, double tau,
                                    kernels::Exec exec = kernels::Exec::parallel);

constexpr double kProbClamp = 1.0 - 1e-7;

}  // namespace suvr
