#include "cxr/linalg.hpp"

#include <cmath>

namespace cxr {

void matvec_add(const Matrix& m, std::span<const double> x, std::span<double> y) {
  if (x.size() != m.cols || y.size() != m.rows) {
    throw DimensionError("matvec_add: dimension mismatch");
  }
  for (std::size_t r = 0; r < m.rows; ++r) {
    const double* w = m.row(r);
    double acc = 0.0;
    for (std::size_t c = 0; c < m.cols; ++c) acc += w[c] * x[c];
    y[r] += acc;
  }
}

void matvec_transpose_add(const Matrix& m, std::span<const double> x,
                          std::span<double> y) {
  if (x.size() != m.rows || y.size() != m.cols) {
    throw DimensionError("matvec_transpose_add: dimension mismatch");
  }
  for (std::size_t r = 0; r < m.rows; ++r) {
    const double* w = m.row(r);
    const double xr = x[r];
    for (std::size_t c = 0; c < m.cols; ++c) y[c] += w[c] * xr;
  }
}

void outer_add(Matrix& m, std::span<const double> a, std::span<const double> b) {
  if (a.size() != m.rows || b.size() != m.cols) {
    throw DimensionError("outer_add: dimension mismatch");
  }
  for (std::size_t r = 0; r < m.rows; ++r) {
    double* w = m.row(r);
    const double ar = a[r];
    for (std::size_t c = 0; c < m.cols; ++c) w[c] += ar * b[c];
  }
}

double uniform01(std::mt19937_64& gen) {
  return static_cast<double>(gen() >> 11) * 0x1.0p-53;
}

void init_uniform_fanin(Matrix& m, std::mt19937_64& gen) {
  const double bound = m.cols > 0 ? 1.0 / std::sqrt(static_cast<double>(m.cols)) : 0.0;
  for (double& v : m.data) v = (2.0 * uniform01(gen) - 1.0) * bound;
}

}  // namespace cxr
