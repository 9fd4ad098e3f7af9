#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "structspan/autodiff.hpp"
#include "structspan/rng.hpp"
#include "structspan/tensor.hpp"

namespace structspan::testing {

inline Tensor random_tensor(Shape shape, RngStream& rng, double lo = -1.0, double hi = 1.0) {
  Tensor t(std::move(shape));
  for (double& v : t.raw()) v = rng.uniform(lo, hi);
  return t;
}

using Matrix = std::vector<std::vector<double>>;

inline Matrix to_matrix(const Tensor& t) {
  Matrix m(t.rows(), std::vector<double>(t.cols()));
  for (std::size_t r = 0; r < t.rows(); ++r)
    for (std::size_t c = 0; c < t.cols(); ++c) m[r][c] = t[r * t.cols() + c];
  return m;
}

inline double max_abs_diff(const Tensor& a, const Tensor& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

inline double max_abs_diff(const Tensor& a, const Matrix& b) {
  double m = 0.0;
  for (std::size_t r = 0; r < b.size(); ++r)
    for (std::size_t c = 0; c < b[r].size(); ++c) m = std::max(m, std::abs(a(r, c) - b[r][c]));
  return m;
}

}  // namespace structspan::testing
