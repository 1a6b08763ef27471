#pragma once

#include <cstddef>
#include <span>

#include "suvr/numeric.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace suvr::kernels {

enum class Exec { serial, parallel };

// Loop-level kernels behind the hot paths. Every OpenMP variant performs the
// per-element arithmetic in exactly the same order as its serial reference,
// so the two are required (and tested) to agree bitwise. Reductions that feed
// a single scalar stay serial; parallelism only ever distributes independent
// output slots across threads.

// out[i] = dot(m.row(i), v), ascending column order within each row.
void matvec(const Matrix& m, std::span<const double> v, std::span<double> out,
            Exec exec = Exec::parallel);

// out[i] = exp((s[i] - shift) * inv_tau)
void exp_shifted(std::span<const double> s, double shift, double inv_tau,
                 std::span<double> out, Exec exec = Exec::parallel);

// out[i] = s[i] * factor
void scale(std::span<const double> s, double factor, std::span<double> out,
           Exec exec = Exec::parallel);

// out[c] = sum_j w[j] * m(j, c), ascending row order within each column.
void weighted_colsum(const Matrix& m, std::span<const double> w, std::span<double> out,
                     Exec exec = Exec::parallel);

// Calls fn(i) for every i in [0, n). fn must only touch state owned by slot i.
template <class Fn>
void for_each_index(std::size_t n, Exec exec, Fn&& fn) {
  if (exec == Exec::parallel) {
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i) {
      fn(static_cast<std::size_t>(i));
    }
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      fn(i);
    }
  }
}

// Plain-loop reference implementations kept for the equivalence tests and the
// benchmark; no pragmas, textbook order.
namespace reference {
void matvec(const Matrix& m, std::span<const double> v, std::span<double> out);
void exp_shifted(std::span<const double> s, double shift, double inv_tau,
                 std::span<double> out);
void scale(std::span<const double> s, double factor, std::span<double> out);
void weighted_colsum(const Matrix& m, std::span<const double> w, std::span<double> out);
}  // namespace reference

int max_threads();
void set_max_threads(int n);  // n <= 0 restores the runtime default

}  // namespace suvr::kernels
