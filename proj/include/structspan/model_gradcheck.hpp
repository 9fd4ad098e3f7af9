#pragma once

#include <string>
#include <vector>

#include "structspan/classifier.hpp"
#include "structspan/config.hpp"
#include "structspan/gradcheck.hpp"
#include "structspan/model.hpp"
#include "structspan/synthetic.hpp"

namespace structspan {

/// A synthetic sentence of exactly `tokens` tokens that keeps at least one
/// strictly nested gold pair when possible, so both loss terms are live.
inline Sentence gradcheck_sentence(int tokens, std::uint64_t seed) {
  const auto pool = gen_synthetic({500, 1.0, 0.5}, seed);
  const Sentence* fallback = nullptr;
  for (const auto& s : pool) {
    if (s.length() < tokens) continue;
    for (int off = 0; off + tokens <= s.length(); ++off) {
      Sentence crop;
      crop.id = s.id;
      crop.tokens.assign(s.tokens.begin() + off, s.tokens.begin() + off + tokens);
      for (const auto& e : s.entities)
        if (e.start >= off && e.end < off + tokens)
          crop.entities.push_back({e.start - off, e.end - off, e.type});
      bool nested = false;
      for (const auto& a : crop.entities)
        for (const auto& b : crop.entities)
          nested = nested || strictly_contains(a.start, a.end, b.start, b.end);
      if (nested) return crop;
    }
    if (!fallback) fallback = &s;
  }
  if (!fallback) {
    Sentence s;
    s.id = "gradcheck";
    for (int i = 0; i < tokens; ++i) s.tokens.push_back("w" + std::to_string(i % 60));
    return s;
  }
  Sentence crop = *fallback;
  crop.tokens.resize(static_cast<std::size_t>(tokens));
  std::erase_if(crop.entities, [&](const EntitySpan& e) { return e.end >= tokens; });
  return crop;
}

/// Finite-difference check of the joint loss over every parameter group of a
/// freshly initialized model, on one synthetic sentence.
inline GradReport check_model_gradients(const RunConfig& config) {
  config.validate();
  const Sentence s = gradcheck_sentence(config.gradcheck_tokens, config.seed);
  const Model m = init_model(config, Vocabulary::build({s}), synthetic_types());
  const auto ids = m.vocab.ids(s.tokens);
  const auto candidates = enumerate_candidates(s.length(), config.max_span_width);
  const auto gold = align_gold(candidates, s.entities, s.length(), m.types);
  const EncoderDims dims = m.encoder_dims();
  LossBuilder build = [&](Tape& tape, const ParamStore& p) {
    return total_loss(tape, ids, gold, config, dims, p, config.lambda).total;
  };
  GradCheckOptions opt;
  opt.step = config.gradcheck_step;
  opt.tolerance = config.gradcheck_tolerance;
  opt.max_coords_per_param = static_cast<std::size_t>(config.gradcheck_samples);
  opt.seed = config.seed;
  return grad_check(build, m.params, opt);
}

}  // namespace structspan
