#include "suvr/memory_bank.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "suvr/errors.hpp"

namespace suvr {

MemoryBank::MemoryBank(Matrix rows, double momentum)
    : embeddings_(std::move(rows)), momentum_(momentum) {
  if (embeddings_.rows() == 0 || embeddings_.cols() == 0) {
    throw DimensionMismatch("MemoryBank: empty bank");
  }
  if (momentum_ < 0.0 || momentum_ > 1.0) {
    throw ConfigError("MemoryBank: momentum must lie in [0, 1], got " +
                      std::to_string(momentum_));
  }
}

MemoryBank::MemoryBank(std::size_t n, std::size_t d, std::uint64_t seed, double momentum)
    : MemoryBank([&] {
        SeededRng rng(seed);
        return random_unit_rows(n, d, rng);
      }(), momentum) {}

MemoryBank MemoryBank::from_rows(Matrix rows, double momentum) {
  for (std::size_t i = 0; i < rows.rows(); ++i) l2_normalize_in_place(rows.row(i));
  return MemoryBank(std::move(rows), momentum);
}

MemoryBank MemoryBank::restore(Matrix rows, double momentum) {
  for (std::size_t i = 0; i < rows.rows(); ++i) {
    double n = norm2(rows.row(i));
    if (std::abs(n - 1.0) > 1e-9) {
      throw NormTooSmall("MemoryBank::restore: row " + std::to_string(i) +
                         " has norm " + std::to_string(n));
    }
  }
  return MemoryBank(std::move(rows), momentum);
}

Vec MemoryBank::similarities(std::span<const double> v, kernels::Exec exec) const {
  if (v.size() != dim()) {
    throw DimensionMismatch("similarities: query length " + std::to_string(v.size()) +
                            " vs bank dim " + std::to_string(dim()));
  }
  Vec out(size());
  kernels::matvec(embeddings_, v, out, exec);
  return out;
}

void MemoryBank::ema_update(std::size_t i, std::span<const double> v) {
  if (i >= size()) {
    throw IndexOutOfRange("ema_update: row " + std::to_string(i) + " of " +
                          std::to_string(size()));
  }
  if (v.size() != dim()) {
    throw DimensionMismatch("ema_update: vector length " + std::to_string(v.size()) +
                            " vs bank dim " + std::to_string(dim()));
  }
  auto row = embeddings_.row(i);
  Vec blend(row.size());
  for (std::size_t c = 0; c < row.size(); ++c) {
    blend[c] = momentum_ * row[c] + (1.0 - momentum_) * v[c];
  }
  l2_normalize_in_place(blend);  // NormTooSmall when the blend cancels; row intact
  std::copy(blend.begin(), blend.end(), row.begin());
}

std::vector<std::size_t> top_k_excluding(std::span<const double> scores, std::size_t k,
                                         std::span<const std::size_t> excluded) {
  if (k == 0) throw NotEnoughCandidates("top_k_excluding: k must be >= 1");
  std::vector<char> mask(scores.size(), 0);
  for (std::size_t e : excluded) {
    if (e < mask.size()) mask[e] = 1;
  }
  std::vector<std::size_t> candidates;
  candidates.reserve(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (!mask[i]) candidates.push_back(i);
  }
  if (candidates.size() < k) {
    throw NotEnoughCandidates("top_k_excluding: need " + std::to_string(k) +
                              " candidates, have " + std::to_string(candidates.size()));
  }
  auto better = [&](std::size_t a, std::size_t b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return a < b;
  };
  std::partial_sort(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(k),
                    candidates.end(), better);
  candidates.resize(k);
  return candidates;
}

}  // namespace suvr
