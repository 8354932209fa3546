#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

namespace cxr {

// Dense row-major matrix of doubles. Sized once, then reused.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

  double* row(std::size_t r) { return data.data() + r * cols; }
  const double* row(std::size_t r) const { return data.data() + r * cols; }

  double& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

  void zero() { std::fill(data.begin(), data.end(), 0.0); }
};

struct DimensionError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// y += M x
void matvec_add(const Matrix& m, std::span<const double> x, std::span<double> y);

// y += M^T x
void matvec_transpose_add(const Matrix& m, std::span<const double> x,
                          std::span<double> y);

// M += a b^T
void outer_add(Matrix& m, std::span<const double> a, std::span<const double> b);

// Deterministic uniform draw in [0, 1) from the generator's top 53 bits.
double uniform01(std::mt19937_64& gen);

// Fill with uniform(-1/sqrt(fan_in), +1/sqrt(fan_in)); fan_in = cols.
void init_uniform_fanin(Matrix& m, std::mt19937_64& gen);

}  // namespace cxr
