#include "suvr/numeric.hpp"

#include <cmath>
#include <numbers>

#include "suvr/errors.hpp"
#include "suvr/kernels.hpp"

namespace suvr {

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t tag) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (tag + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

double SeededRng::next_normal() {
  // u1 in (0, 1] keeps the log finite.
  double u1 = 1.0 - next_double();
  double u2 = next_double();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::uint64_t SeededRng::next_below(std::uint64_t bound) {
  if (bound == 0) throw IndexOutOfRange("next_below: bound must be positive");
  std::uint64_t threshold = (~bound + 1) % bound;  // 2^64 mod bound
  for (;;) {
    std::uint64_t r = next_u64();
    if (r >= threshold) return r % bound;
  }
}

void SeededRng::shuffle(std::vector<std::size_t>& items) {
  for (std::size_t i = items.size(); i > 1; --i) {
    std::size_t j = static_cast<std::size_t>(next_below(i));
    std::swap(items[i - 1], items[j]);
  }
}

double norm2(std::span<const double> v) {
  double acc = 0.0;
  for (double x : v) acc += x * x;
  return std::sqrt(acc);
}

void l2_normalize_in_place(std::span<double> v) {
  double n = norm2(v);
  if (n < kNormFloor) {
    throw NormTooSmall("l2_normalize: vector norm " + std::to_string(n) +
                       " is below the 1e-12 floor");
  }
  for (double& x : v) x /= n;
}

Vec l2_normalize(std::span<const double> v) {
  Vec out(v.begin(), v.end());
  l2_normalize_in_place(out);
  return out;
}

double dot(std::span<const double> u, std::span<const double> v) {
  if (u.size() != v.size()) {
    throw DimensionMismatch("dot: lengths " + std::to_string(u.size()) + " vs " +
                            std::to_string(v.size()));
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) acc += u[i] * v[i];
  return acc;
}

Vec stable_softmax(std::span<const double> scores, double tau) {
  if (!(tau > 0.0)) {
    throw NonPositiveTemperature("stable_softmax: tau = " + std::to_string(tau));
  }
  if (scores.empty()) throw DimensionMismatch("stable_softmax: empty scores");
  double hi = scores[0];
  for (double s : scores) hi = std::max(hi, s);

  Vec out(scores.size());
  kernels::exp_shifted(scores, hi, 1.0 / tau, out);
  double sum = 0.0;
  for (double e : out) sum += e;
  kernels::scale(out, 1.0 / sum, out);
  return out;
}

Matrix random_unit_rows(std::size_t n, std::size_t d, SeededRng& rng) {
  if (n == 0 || d == 0) {
    throw DimensionMismatch("random_unit_rows: sizes must be positive, got " +
                            std::to_string(n) + "x" + std::to_string(d));
  }
  Matrix m(n, d);
  for (std::size_t i = 0; i < n; ++i) {
    auto row = m.row(i);
    for (double& x : row) x = rng.next_normal();
    l2_normalize_in_place(row);
  }
  return m;
}

}  // namespace suvr
