#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "suvr/kernels.hpp"
#include "suvr/numeric.hpp"

namespace suvr {

// One unit-norm embedding per training instance, updated by exponential
// moving average. Single-writer: the training loop owns mutation; similarity
// queries are read-only and may run concurrently between updates.
class MemoryBank {
 public:
  // n random unit rows, deterministic per seed.
  MemoryBank(std::size_t n, std::size_t d, std::uint64_t seed, double momentum = 0.5);

  // Rows are re-normalized; use for hand-built banks in tests and tools.
  static MemoryBank from_rows(Matrix rows, double momentum = 0.5);

  // Rows taken verbatim (validated unit within 1e-9); keeps checkpoint
  // restores bit-exact.
  static MemoryBank restore(Matrix rows, double momentum);

  std::size_t size() const { return embeddings_.rows(); }
  std::size_t dim() const { return embeddings_.cols(); }
  double momentum() const { return momentum_; }

  std::span<const double> row(std::size_t i) const { return embeddings_.row(i); }
  const Matrix& embeddings() const { return embeddings_; }

  // M * v, length n.
  Vec similarities(std::span<const double> v,
                   kernels::Exec exec = kernels::Exec::parallel) const;

  // Row i <- normalize(momentum * M_i + (1 - momentum) * v). v must be unit.
  // Throws NormTooSmall when the blend cancels.
  void ema_update(std::size_t i, std::span<const double> v);

 private:
  MemoryBank(Matrix rows, double momentum);
  Matrix embeddings_;
  double momentum_;
};

// Exactly k indices with the highest scores, none excluded, descending score,
// ties broken by ascending index. Throws NotEnoughCandidates.
std::vector<std::size_t> top_k_excluding(std::span<const double> scores, std::size_t k,
                                         std::span<const std::size_t> excluded);

}  // namespace suvr
