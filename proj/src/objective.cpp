#include "suvr/objective.hpp"

#include <cmath>
#include <string>
#include <unordered_set>

#include "suvr/errors.hpp"

namespace suvr {

namespace {

void check_sets(const MemoryBank& bank, std::size_t query,
                std::span<const std::size_t> positives,
                std::span<const std::size_t> negatives) {
  std::unordered_set<std::size_t> seen{query};
  if (query >= bank.size()) {
    throw IndexOutOfRange("suvr_loss: query " + std::to_string(query) + " out of range");
  }
  for (std::size_t j : positives) {
    if (j >= bank.size()) throw IndexOutOfRange("suvr_loss: positive index out of range");
    if (!seen.insert(j).second) {
      throw SetOverlap("suvr_loss: index " + std::to_string(j) +
                       " repeated across query/positives");
    }
  }
  for (std::size_t c : negatives) {
    if (c >= bank.size()) throw IndexOutOfRange("suvr_loss: negative index out of range");
    if (!seen.insert(c).second) {
      throw SetOverlap("suvr_loss: index " + std::to_string(c) +
                       " overlaps query/positives/negatives");
    }
  }
}

struct Terms {
  double instance, positive, negative;
};

Terms loss_terms(const Vec& p, std::size_t query, std::span<const std::size_t> positives,
                 std::span<const std::size_t> negatives) {
  Terms t{-std::log(p[query]), 0.0, 0.0};
  for (std::size_t j : positives) t.positive -= std::log(p[j]);
  for (std::size_t c : negatives) t.negative -= std::log(1.0 - std::min(p[c], kProbClamp));
  return t;
}

// dL/dv = sum of per-term coefficients alpha_a on (M_a - p_bar) / tau, where
// p_bar = sum_j p_j M_j. A -log p_a term has alpha_a = -1; a -log(1 - p_c)
// term has alpha_c = p_c / (1 - p_c), saturating at the clamp.
Vec gradient_from_probs(const MemoryBank& bank, const Vec& p, std::size_t query,
                        std::span<const std::size_t> positives,
                        std::span<const std::size_t> negatives, double tau,
                        kernels::Exec exec) {
  const std::size_t d = bank.dim();
  Vec p_bar(d);
  kernels::weighted_colsum(bank.embeddings(), p, p_bar, exec);

  double alpha_sum = 0.0;
  Vec grad(d, 0.0);
  auto add_scaled = [&](std::span<const double> row, double alpha) {
    alpha_sum += alpha;
    for (std::size_t c = 0; c < d; ++c) grad[c] += alpha * row[c];
  };
  add_scaled(bank.row(query), -1.0);
  for (std::size_t j : positives) add_scaled(bank.row(j), -1.0);
  for (std::size_t c : negatives) {
    double pc = std::min(p[c], kProbClamp);
    add_scaled(bank.row(c), pc / (1.0 - pc));
  }
  for (std::size_t c = 0; c < d; ++c) grad[c] = (grad[c] - alpha_sum * p_bar[c]) / tau;
  return grad;
}

}  // namespace

Vec instance_probabilities(const MemoryBank& bank, std::span<const double> v, double tau,
                           kernels::Exec exec) {
  return stable_softmax(bank.similarities(v, exec), tau);
}

LossBreakdown suvr_loss(const MemoryBank& bank, std::span<const double> v,
                        std::size_t query, std::span<const std::size_t> positives,
                        std::span<const std::size_t> negatives, double tau,
                        kernels::Exec exec) {
  check_sets(bank, query, positives, negatives);
  LossBreakdown out;
  out.probabilities = instance_probabilities(bank, v, tau, exec);
  Terms t = loss_terms(out.probabilities, query, positives, negatives);
  out.instance_term = t.instance;
  out.positive_term = t.positive;
  out.negative_term = t.negative;
  out.total = t.instance + t.positive + t.negative;
  return out;
}

Vec loss_gradient(const MemoryBank& bank, std::span<const double> v, std::size_t query,
                  std::span<const std::size_t> positives,
                  std::span<const std::size_t> negatives, double tau,
                  kernels::Exec exec) {
  check_sets(bank, query, positives, negatives);
  Vec p = instance_probabilities(bank, v, tau, exec);
  return gradient_from_probs(bank, p, query, positives, negatives, tau, exec);
}

LossWithGradient loss_with_gradient(const MemoryBank& bank, std::span<const double> v,
                                    std::size_t query,
                                    std::span<const std::size_t> positives,
                                    std::span<const std::size_t> negatives, double tau,
                                    kernels::Exec exec) {
  check_sets(bank, query, positives, negatives);
  Vec p = instance_probabilities(bank, v, tau, exec);
  Terms t = loss_terms(p, query, positives, negatives);
  LossWithGradient out;
  out.instance_term = t.instance;
  out.positive_term = t.positive;
  out.negative_term = t.negative;
  out.total = t.instance + t.positive + t.negative;
  out.gradient = gradient_from_probs(bank, p, query, positives, negatives, tau, exec);
  return out;
}

}  // namespace suvr
