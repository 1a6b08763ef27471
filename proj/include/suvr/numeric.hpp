#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace suvr {

using Vec = std::vector<double>;

// Row-major dense matrix of doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// splitmix64-style mixer used for seed derivation.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t tag);

// Deterministic random source. The engine (mt19937_64) is fully specified by
// the standard, and all distributions are implemented here on top of its raw
// output, so a seed reproduces the same stream on every platform. Single-owner
// mutable state: callers that parallelize must split seeds via child().
class SeededRng {
 public:
  explicit SeededRng(std::uint64_t seed) : seed_(seed), engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform on [0, 1), 53 random bits.
  double next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // Standard normal via Box-Muller (cosine branch, stateless).
  double next_normal();

  // Unbiased uniform integer in [0, bound).
  std::uint64_t next_below(std::uint64_t bound);

  // Independent stream derived from this rng's seed and a tag; unaffected by
  // how much of this stream has been consumed.
  SeededRng child(std::uint64_t tag) const { return SeededRng(mix_seed(seed_, tag)); }

  // In-place Fisher-Yates shuffle.
  void shuffle(std::vector<std::size_t>& items);

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

// Returns v / ||v||2. Throws NormTooSmall when ||v||2 < 1e-12.
Vec l2_normalize(std::span<const double> v);
void l2_normalize_in_place(std::span<double> v);

double norm2(std::span<const double> v);

// Throws DimensionMismatch on unequal lengths.
double dot(std::span<const double> u, std::span<const double> v);

// Softmax of scores/tau with unconditional max-subtraction.
// Throws NonPositiveTemperature when tau <= 0.
Vec stable_softmax(std::span<const double> scores, double tau);

// n rows of i.i.d. standard-normal entries, each l2-normalized.
Matrix random_unit_rows(std::size_t n, std::size_t d, SeededRng& rng);

constexpr double kNormFloor = 1e-12;

}  // namespace suvr
