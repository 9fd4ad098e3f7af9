#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "structspan/autodiff.hpp"
#include "structspan/params.hpp"
#include "structspan/rng.hpp"

namespace structspan {

/// Builds a scalar loss on `tape` from the given parameters. Must register
/// every parameter it reads through ParamStore::leaf.
using LossBuilder = std::function<Var(Tape&, const ParamStore&)>;

struct GradCheckOptions {
  double step = 1e-3;
  double tolerance = 1e-4;
  /// Coordinates checked per array; arrays at most this large are checked
  /// exhaustively, larger ones on a seeded sample without replacement.
  std::size_t max_coords_per_param = 64;
  std::uint64_t seed = 7;
};

struct GradReport {
  std::map<std::string, double> max_rel_error;
  std::map<std::string, std::size_t> coords_checked;
  bool pass = true;
  double step = 0.0;
  double tolerance = 0.0;

  double worst() const {
    double w = 0.0;
    for (const auto& [_, e] : max_rel_error) w = std::max(w, e);
    return w;
  }
};

inline double relative_error(double analytic, double numeric) {
  return std::abs(analytic - numeric) / std::max(1e-8, std::abs(analytic) + std::abs(numeric));
}

/// Compares backward() against central differences (f(θ+ε) − f(θ−ε)) / 2ε.
inline GradReport grad_check(const LossBuilder& build, ParamStore params,
                             const GradCheckOptions& opt = {}) {
  if (!(opt.step > 0.0)) throw ContractError("grad_check: step must be positive");

  auto loss_at = [&](const ParamStore& p) {
    Tape tape;
    return evaluate(build(tape, p)).item();
  };

  GradMap analytic;
  {
    Tape tape;
    Var root = build(tape, params);
    const double f0 = evaluate(root).item();
    analytic = backward(root);
    const double f1 = loss_at(params);
    if (f0 != f1)
      throw DeterminismError("grad_check: loss builder returned " + std::to_string(f0) +
                             " then " + std::to_string(f1) + " for identical parameters");
  }

  GradReport report;
  report.step = opt.step;
  report.tolerance = opt.tolerance;
  RngStream rng = RngStream::named(opt.seed, "gradcheck.coords");

  for (auto& [name, tensor] : params) {
    std::vector<std::size_t> coords(tensor.size());
    for (std::size_t i = 0; i < coords.size(); ++i) coords[i] = i;
    if (coords.size() > opt.max_coords_per_param) {
      rng.shuffle(coords);
      coords.resize(opt.max_coords_per_param);
      std::sort(coords.begin(), coords.end());
    }
    auto it = analytic.find(name);
    const Tensor zero(tensor.shape());
    const Tensor& g = it == analytic.end() ? zero : it->second;

    double worst = 0.0;
    for (std::size_t c : coords) {
      const double saved = tensor[c];
      tensor[c] = saved + opt.step;
      const double up = loss_at(params);
      tensor[c] = saved - opt.step;
      const double down = loss_at(params);
      tensor[c] = saved;
      const double numeric = (up - down) / (2.0 * opt.step);
      worst = std::max(worst, relative_error(g[c], numeric));
    }
    report.max_rel_error[name] = worst;
    report.coords_checked[name] = coords.size();
    if (!(worst <= opt.tolerance)) report.pass = false;
  }
  return report;
}

}  // namespace structspan
