#pragma once

#include <chrono>
#include <cmath>
#include <functional>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "structspan/classifier.hpp"
#include "structspan/config.hpp"
#include "structspan/corpus.hpp"
#include "structspan/evaluation.hpp"
#include "structspan/model.hpp"
#include "structspan/optimizer.hpp"
#include "structspan/rng.hpp"

namespace structspan {

/// A training unit: one window of a sentence, tokenized and aligned.
struct TrainExample {
  std::vector<int> ids;
  GoldAlignment gold;
};

struct EpochRecord {
  int epoch = 0;
  double total = 0.0;
  double cls = 0.0;
  double structural = 0.0;
  double val_f1 = 0.0;
  double seconds = 0.0;
};

/// Per-epoch training history. Everything except `seconds` is a pure
/// function of (config, corpus); seconds is wall time.
struct TrainLog {
  std::vector<EpochRecord> epochs;
  int best_epoch = 0;
  std::size_t dropped_too_wide = 0;
  std::size_t dropped_same_span = 0;
  std::size_t clamped_probabilities = 0;

  /// Equality on the deterministic fields.
  bool same_trajectory(const TrainLog& o) const {
    if (epochs.size() != o.epochs.size() || best_epoch != o.best_epoch) return false;
    for (std::size_t i = 0; i < epochs.size(); ++i) {
      const auto &a = epochs[i], &b = o.epochs[i];
      if (a.epoch != b.epoch || a.total != b.total || a.cls != b.cls ||
          a.structural != b.structural || a.val_f1 != b.val_f1)
        return false;
    }
    return dropped_too_wide == o.dropped_too_wide && dropped_same_span == o.dropped_same_span &&
           clamped_probabilities == o.clamped_probabilities;
  }

  Json to_json() const {
    Json rows = Json::array();
    for (const auto& e : epochs)
      rows.push_back(Json{{"epoch", e.epoch}, {"train_total", e.total}, {"train_cls", e.cls},
                          {"train_struct", e.structural}, {"val_f1", e.val_f1},
                          {"seconds", e.seconds}});
    return Json{{"epochs", std::move(rows)},
                {"best_epoch", best_epoch},
                {"dropped_too_wide", dropped_too_wide},
                {"dropped_same_span", dropped_same_span},
                {"clamped_probabilities", clamped_probabilities}};
  }
};

struct TrainResult {
  Model model;  // parameters of the best validation epoch
  TrainLog log;
};

/// Windows, tokenizes and aligns a corpus for training.
inline std::vector<TrainExample> prepare_examples(const std::vector<Sentence>& sentences,
                                                  const Model& m, TrainLog* log = nullptr) {
  std::vector<TrainExample> out;
  for (const auto& s : sentences) {
    const auto ws = sliding_window(s, m.config.max_len, m.config.max_span_width);
    if (log) log->dropped_too_wide += ws.dropped_too_wide;
    for (const auto& w : ws.windows) {
      const int n = w.sentence.length();
      const auto candidates = enumerate_candidates(n, m.config.max_span_width);
      TrainExample ex{m.vocab.ids(w.sentence.tokens),
                      align_gold(candidates, w.sentence.entities, n, m.types)};
      if (log) log->dropped_same_span += ex.gold.dropped_same_span;
      out.push_back(std::move(ex));
    }
  }
  return out;
}

struct ExampleGradient {
  GradMap grads;
  LossBreakdown loss;
};

inline ExampleGradient example_gradient(const TrainExample& ex, const Model& m, double lambda) {
  Tape tape;
  LossGraph g = total_loss(tape, ex.ids, ex.gold, m, lambda);
  if (!std::isfinite(g.parts.total))
    throw NumericError("non-finite loss (cls " + std::to_string(g.parts.l_cls) + ", struct " +
                       std::to_string(g.parts.l_struct) + ")");
  return {backward(g.total), g.parts};
}

/// Average gradient and loss over a batch. Per-example work may run on
/// several threads; the reduction always sums in batch order.
struct BatchGradient {
  GradMap grads;
  double total = 0.0, cls = 0.0, structural = 0.0;
  std::size_t clamped = 0;
};

inline BatchGradient batch_gradient(const std::vector<const TrainExample*>& batch, const Model& m,
                                    double lambda, int threads) {
  std::vector<ExampleGradient> parts(batch.size());
  std::vector<std::exception_ptr> errors(batch.size());
  auto work = [&](std::size_t i) {
    try {
      parts[i] = example_gradient(*batch[i], m, lambda);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  };
  const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(threads), batch.size());
  if (workers <= 1) {
    for (std::size_t i = 0; i < batch.size(); ++i) work(i);
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w)
      pool.emplace_back([&, w] {
        for (std::size_t i = w; i < batch.size(); i += workers) work(i);
      });
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);

  BatchGradient out;
  const double inv = 1.0 / static_cast<double>(batch.size());
  for (const auto& [name, t] : m.params) out.grads.emplace(name, Tensor(t.shape()));
  for (const auto& p : parts) {
    for (auto& [name, acc] : out.grads) {
      const Tensor& g = p.grads.at(name);
      for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += g[i];
    }
    out.total += p.loss.total;
    out.cls += p.loss.l_cls;
    out.structural += p.loss.l_struct;
    out.clamped += p.loss.clamped;
  }
  for (auto& [_, acc] : out.grads)
    for (double& v : acc.raw()) v *= inv;
  out.total *= inv;
  out.cls *= inv;
  out.structural *= inv;
  return out;
}

/// Called after each epoch; for progress output.
using EpochCallback = std::function<void(const EpochRecord&)>;

/// Mini-batch training of L = L_cls + λ·L_struct. Shuffles with the
/// "shuffle" stream each epoch and keeps the parameters of the epoch with
/// the best validation micro-F1 (earliest on ties). `validation` may be
/// empty, in which case the last epoch is kept.
inline TrainResult train(const std::vector<Sentence>& train_set,
                         const std::vector<Sentence>& validation, Model model,
                         const EpochCallback& on_epoch = {}) {
  const RunConfig& c = model.config;
  c.validate();
  if (train_set.empty()) throw ConfigError("training corpus is empty");

  TrainResult result{model, {}};
  TrainLog& log = result.log;
  const auto examples = prepare_examples(train_set, model, &log);

  OptimizerState opt;
  opt.hyper = {c.learning_rate, c.beta1, c.beta2, c.adam_eps};
  RngStream shuffle = RngStream::named(c.seed, "shuffle");
  std::vector<std::size_t> order(examples.size());
  double best_f1 = -1.0;

  for (int epoch = 1; epoch <= c.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    shuffle.shuffle(order);

    EpochRecord rec;
    rec.epoch = epoch;
    std::size_t batches = 0;
    for (std::size_t b = 0; b < order.size(); b += static_cast<std::size_t>(c.batch_size)) {
      std::vector<const TrainExample*> batch;
      for (std::size_t i = b; i < std::min(order.size(), b + static_cast<std::size_t>(c.batch_size)); ++i)
        batch.push_back(&examples[order[i]]);
      BatchGradient g = batch_gradient(batch, model, c.lambda, c.threads);
      clip_global_norm(g.grads, c.clip_norm);
      adam_step(model.params, g.grads, opt);
      rec.total += g.total;
      rec.cls += g.cls;
      rec.structural += g.structural;
      log.clamped_probabilities += g.clamped;
      ++batches;
    }
    rec.total /= static_cast<double>(batches);
    rec.cls /= static_cast<double>(batches);
    rec.structural /= static_cast<double>(batches);

    const bool have_val = !validation.empty();
    rec.val_f1 = have_val ? evaluate_corpus(model, validation).micro().f1 : 0.0;
    if (!have_val || rec.val_f1 > best_f1) {
      best_f1 = rec.val_f1;
      log.best_epoch = epoch;
      result.model.params = model.params;
    }
    rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    log.epochs.push_back(rec);
    if (on_epoch) on_epoch(rec);
  }
  return result;
}

}  // namespace structspan
