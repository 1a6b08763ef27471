#include "suvr/kernels.hpp"

#include <cmath>

#include "suvr/errors.hpp"

namespace suvr::kernels {

namespace reference {

void matvec(const Matrix& m, std::span<const double> v, std::span<double> out) {
  for (std::size_t i = 0; i < m.rows(); ++i) {
    const double* row = m.data() + i * m.cols();
    double acc = 0.0;
    for (std::size_t c = 0; c < m.cols(); ++c) acc += row[c] * v[c];
    out[i] = acc;
  }
}

void exp_shifted(std::span<const double> s, double shift, double inv_tau,
                 std::span<double> out) {
  for (std::size_t i = 0; i < s.size(); ++i) out[i] = std::exp((s[i] - shift) * inv_tau);
}

void scale(std::span<const double> s, double factor, std::span<double> out) {
  for (std::size_t i = 0; i < s.size(); ++i) out[i] = s[i] * factor;
}

void weighted_colsum(const Matrix& m, std::span<const double> w, std::span<double> out) {
  // Row-outer for cache locality; per output column the additions still run
  // in ascending row order, the order the parallel kernel reproduces.
  for (std::size_t c = 0; c < m.cols(); ++c) out[c] = 0.0;
  for (std::size_t j = 0; j < m.rows(); ++j) {
    const double* row = m.data() + j * m.cols();
    for (std::size_t c = 0; c < m.cols(); ++c) out[c] += w[j] * row[c];
  }
}

}  // namespace reference

void matvec(const Matrix& m, std::span<const double> v, std::span<double> out, Exec exec) {
  if (v.size() != m.cols()) {
    throw DimensionMismatch("matvec: vector length " + std::to_string(v.size()) +
                            " vs " + std::to_string(m.cols()) + " columns");
  }
  if (exec == Exec::serial) {
    reference::matvec(m, v, out);
    return;
  }
  const double* data = m.data();
  const std::size_t cols = m.cols();
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(m.rows()); ++i) {
    const double* row = data + static_cast<std::size_t>(i) * cols;
    double acc = 0.0;
    for (std::size_t c = 0; c < cols; ++c) acc += row[c] * v[c];
    out[i] = acc;
  }
}

void exp_shifted(std::span<const double> s, double shift, double inv_tau,
                 std::span<double> out, Exec exec) {
  if (exec == Exec::serial) {
    reference::exp_shifted(s, shift, inv_tau, out);
    return;
  }
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(s.size()); ++i) {
    out[i] = std::exp((s[i] - shift) * inv_tau);
  }
}

void scale(std::span<const double> s, double factor, std::span<double> out, Exec exec) {
  if (exec == Exec::serial) {
    reference::scale(s, factor, out);
    return;
  }
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(s.size()); ++i) {
    out[i] = s[i] * factor;
  }
}

void weighted_colsum(const Matrix& m, std::span<const double> w, std::span<double> out,
                     Exec exec) {
  if (w.size() != m.rows()) {
    throw DimensionMismatch("weighted_colsum: weight length " + std::to_string(w.size()) +
                            " vs " + std::to_string(m.rows()) + " rows");
  }
  if (exec == Exec::serial) {
    reference::weighted_colsum(m, w, out);
    return;
  }
  const double* data = m.data();
  const std::size_t rows = m.rows();
  const std::size_t cols = m.cols();
  // Column-parallel: each output slot accumulates over rows in ascending
  // order, matching the reference bit for bit.
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t c = 0; c < static_cast<std::ptrdiff_t>(cols); ++c) {
    double acc = 0.0;
    for (std::size_t j = 0; j < rows; ++j) acc += w[j] * data[j * cols + c];
    out[c] = acc;
  }
}

int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

void set_max_threads(int n) {
#ifdef _OPENMP
  if (n > 0) {
    omp_set_num_threads(n);
  } else {
    omp_set_num_threads(omp_get_num_procs());
  }
#else
  (void)n;
#endif
}

}  // namespace suvr::kernels
