#pragma once

#include <cmath>
#include <string>

#include "structspan/autodiff.hpp"
#include "structspan/params.hpp"
#include "structspan/rng.hpp"

namespace structspan {

namespace attn_names {
inline const std::string wq = "attn.W_Q";
inline const std::string wk = "attn.W_K";
}  // namespace attn_names

/// W_Q uniform in ±1/√d; W_K starts as a copy of W_Q.
inline void init_struct_attention(ParamStore& p, std::size_t d, std::size_t dk, RngStream& rng) {
  const double a = 1.0 / std::sqrt(static_cast<double>(d));
  Tensor w({d, dk});
  for (double& v : w.raw()) v = rng.uniform(-a, a);
  p.add(attn_names::wq, w);
  p.add(attn_names::wk, std::move(w));
}

/// α = row-softmax((S W_Q)(S W_K)ᵀ / √d_k). Every candidate, itself included,
/// is in each row's normalization.
inline Var attention_weights(Var s_raw, Var wq, Var wk) {
  const double dk = static_cast<double>(wq.value().cols());
  Var scores = ops::matmul(ops::matmul(s_raw, wq), ops::matmul(s_raw, wk), ops::Trans::Yes);
  return ops::softmax_rows(ops::scale(scores, 1.0 / std::sqrt(dk)));
}

/// s̃ = α · S. Raw candidate rows are mixed directly, with no value projection.
inline Var aggregate(Var alpha, Var s_raw) { return ops::matmul(alpha, s_raw); }

}  // namespace structspan
