#pragma once

#include <cmath>
#include <map>
#include <string>

#include "structspan/errors.hpp"
#include "structspan/params.hpp"

namespace structspan {

struct AdamHyper {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct OptimizerState {
  AdamHyper hyper;
  std::map<std::string, Tensor> first_moment;
  std::map<std::string, Tensor> second_moment;
  long step = 0;
};

/// One bias-corrected adaptive-moment update. Throws before touching any
/// state if a gradient is missing or non-finite.
inline void adam_step(ParamStore& params, const GradMap& grads, OptimizerState& state) {
  for (const auto& [name, value] : params) {
    auto it = grads.find(name);
    if (it == grads.end()) throw ContractError("adam_step: no gradient for " + name);
    if (it->second.shape() != value.shape())
      throw DimensionError("adam_step: gradient for " + name + " has shape " +
                           shape_str(it->second.shape()) + ", parameter " +
                           shape_str(value.shape()));
    if (!it->second.all_finite()) throw NumericError("non-finite gradient for " + name);
  }
  const AdamHyper& h = state.hyper;
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(h.beta1, t);
  const double c2 = 1.0 - std::pow(h.beta2, t);
  for (auto& [name, value] : params) {
    const Tensor& g = grads.at(name);
    auto [mit, _m] = state.first_moment.try_emplace(name, value.shape());
    auto [vit, _v] = state.second_moment.try_emplace(name, value.shape());
    Tensor& m = mit->second;
    Tensor& v = vit->second;
    for (std::size_t i = 0; i < value.size(); ++i) {
      m[i] = h.beta1 * m[i] + (1.0 - h.beta1) * g[i];
      v[i] = h.beta2 * v[i] + (1.0 - h.beta2) * g[i] * g[i];
      value[i] -= h.learning_rate * (m[i] / c1) / (std::sqrt(v[i] / c2) + h.eps);
    }
  }
}

/// Rescales all gradients so their joint L2 norm is at most max_norm.
/// Returns the norm before clipping. max_norm <= 0 disables clipping.
inline double clip_global_norm(GradMap& grads, double max_norm) {
  double sq = 0.0;
  for (const auto& [_, g] : grads)
    for (double x : g.raw()) sq += x * x;
  const double norm = std::sqrt(sq);
  if (max_norm > 0.0 && norm > max_norm) {
    const double s = max_norm / norm;
    for (auto& [_, g] : grads)
      for (double& x : g.raw()) x *= s;
  }
  return norm;
}

}  // namespace structspan
