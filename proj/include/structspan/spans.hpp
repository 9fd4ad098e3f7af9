#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "structspan/autodiff.hpp"
#include "structspan/params.hpp"
#include "structspan/rng.hpp"

namespace structspan {

/// Candidate (i, j), 0-based, both ends inclusive.
struct SpanIndex {
  int start = 0;
  int end = 0;

  int width() const { return end - start + 1; }
  auto operator<=>(const SpanIndex&) const = default;
};

/// All (i, j) with i <= j < n and width <= max_width, lexicographic.
inline std::vector<SpanIndex> enumerate_candidates(int n, int max_width) {
  std::vector<SpanIndex> out;
  if (n < 1 || max_width < 1) return out;
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n && j - i + 1 <= max_width; ++j) out.push_back({i, j});
  return out;
}

/// Sum over w = 1..min(max_width, n) of (n - w + 1).
inline std::size_t candidate_count(int n, int max_width) {
  std::size_t m = 0;
  for (int w = 1; w <= std::min(n, max_width); ++w) m += static_cast<std::size_t>(n - w + 1);
  return m;
}

/// Row index of (start, end) in the lexicographic enumeration, or -1.
inline long candidate_position(const std::vector<SpanIndex>& spans, SpanIndex s) {
  auto it = std::lower_bound(spans.begin(), spans.end(), s);
  if (it == spans.end() || *it != s) return -1;
  return static_cast<long>(it - spans.begin());
}

namespace span_names {
inline const std::string ws = "span.W_s";
inline const std::string bs = "span.b_s";
}  // namespace span_names

inline void init_span_layer(ParamStore& p, std::size_t d, RngStream& rng) {
  const double a = 1.0 / std::sqrt(3.0 * static_cast<double>(d));
  Tensor w({3 * d, d});
  for (double& v : w.raw()) v = rng.uniform(-a, a);
  p.add(span_names::ws, std::move(w));
  p.add(span_names::bs, Tensor({d}));
}

/// s_ij = tanh([h_i ; h_j ; h_i ⊙ h_j] · W_s + b_s), one row per span.
/// Block order of the 3d input is start state, end state, product.
inline Var span_repr(Var h, const std::vector<SpanIndex>& spans, Var ws, Var bs) {
  const long n = static_cast<long>(h.value().rows());
  if (spans.empty()) throw ContractError("span_repr: no candidate spans");
  std::vector<std::size_t> starts, ends;
  starts.reserve(spans.size());
  ends.reserve(spans.size());
  for (const auto& s : spans) {
    if (s.start < 0 || s.end < s.start || s.end >= n)
      throw ContractError("span_repr: span (" + std::to_string(s.start) + "," +
                          std::to_string(s.end) + ") invalid for " + std::to_string(n) +
                          " tokens");
    starts.push_back(static_cast<std::size_t>(s.start));
    ends.push_back(static_cast<std::size_t>(s.end));
  }
  Var hi = ops::gather_rows(h, std::move(starts));
  Var hj = ops::gather_rows(h, std::move(ends));
  Var features = ops::concat({hi, hj, ops::mul(hi, hj)});
  return ops::tanh(ops::add(ops::matmul(features, ws), bs));
}

inline Var span_repr(Tape& tape, Var h, const std::vector<SpanIndex>& spans, const ParamStore& p) {
  return span_repr(h, spans, p.leaf(tape, span_names::ws), p.leaf(tape, span_names::bs));
}

}  // namespace structspan
