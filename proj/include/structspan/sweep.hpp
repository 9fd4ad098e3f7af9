#pragma once

#include <chrono>
#include <cstdio>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "structspan/config.hpp"
#include "structspan/corpus.hpp"
#include "structspan/evaluation.hpp"
#include "structspan/synthetic.hpp"
#include "structspan/trainer.hpp"

namespace structspan {

inline SyntheticConfig synthetic_config(const RunConfig& c) {
  return {c.synth_sentences, c.synth_nesting_rate, c.synth_overlap_rate};
}

inline SplitRatios split_ratios(const RunConfig& c) {
  return {c.train_ratio, c.val_ratio, c.test_ratio};
}

/// Seeded synthetic corpus split per the config's ratios.
inline CorpusSplit synthetic_split(const RunConfig& c) {
  return split_corpus(gen_synthetic(synthetic_config(c), c.seed), split_ratios(c), c.seed);
}

struct Experiment {
  TrainResult trained;
  EvalReport test;
  double seconds = 0.0;
};

/// Vocabulary from the training part, fresh init, train, evaluate on test.
inline Experiment run_experiment(const RunConfig& config, const CorpusSplit& split,
                                 const TypeInventory& types, const EpochCallback& on_epoch = {}) {
  const auto t0 = std::chrono::steady_clock::now();
  Model init = init_model(config, Vocabulary::build(split.train), types);
  Experiment e{train(split.train, split.validation, std::move(init), on_epoch), {}, 0.0};
  e.test = evaluate_corpus(e.trained.model, split.test);
  e.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return e;
}

enum class SweepAxis { LearningRate, HiddenDim };

inline SweepAxis parse_axis(const std::string& s) {
  if (s == "learning-rate" || s == "learning_rate") return SweepAxis::LearningRate;
  if (s == "hidden-dim" || s == "hidden_dim") return SweepAxis::HiddenDim;
  throw ConfigError("unknown sweep axis '" + s + "' (expected learning-rate or hidden-dim)");
}

inline const char* axis_name(SweepAxis a) {
  return a == SweepAxis::LearningRate ? "learning_rate" : "hidden_dim";
}

/// Default sweep grids.
inline std::vector<double> default_grid(SweepAxis a) {
  if (a == SweepAxis::LearningRate) return {1e-5, 2e-5, 3e-5, 5e-5, 1e-4};
  return {128, 256, 512, 768};
}

/// Base config with one knob changed. A hidden-dim row keeps key_dim = d/2
/// and ff_dim = 2d.
inline RunConfig apply_axis(RunConfig c, SweepAxis a, double value) {
  if (a == SweepAxis::LearningRate) {
    c.learning_rate = value;
  } else {
    const double rounded = std::round(value);
    if (rounded != value || value < 2) throw ConfigError("hidden_dim sweep values must be integers >= 2");
    c.hidden_dim = static_cast<int>(value);
    c.key_dim = std::max(1, c.hidden_dim / 2);
    c.ff_dim = 2 * c.hidden_dim;
  }
  c.validate();
  return c;
}

struct SweepRow {
  double value = 0.0;
  bool failed = false;
  std::string error;
  double accuracy = 0.0, precision = 0.0, recall = 0.0, f1 = 0.0;
  int epochs = 0;
  double seconds = 0.0;
};

struct SweepResult {
  SweepAxis axis = SweepAxis::LearningRate;
  std::vector<SweepRow> rows;

  static std::string format(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
  }

  /// Header: axis,value,accuracy,precision,recall,f1,epochs,seconds. Failed
  /// rows carry "failed" in every metric column.
  std::string csv(bool with_seconds = true) const {
    std::ostringstream os;
    os << "axis,value,accuracy,precision,recall,f1,epochs,seconds\n";
    for (const auto& r : rows) {
      os << axis_name(axis) << ',' << format(r.value) << ',';
      if (r.failed) os << "failed,failed,failed,failed,";
      else os << format(r.accuracy) << ',' << format(r.precision) << ',' << format(r.recall) << ','
              << format(r.f1) << ',';
      os << r.epochs << ',' << (with_seconds ? format(r.seconds) : std::string("-")) << '\n';
    }
    return os.str();
  }
};

/// Trains one model per value on the same seeded synthetic split. A failing
/// row is recorded and the sweep moves on.
inline SweepResult sweep(SweepAxis axis, const std::vector<double>& values, const RunConfig& base,
                         const std::function<void(const SweepRow&)>& on_row = {}) {
  if (values.empty()) throw ConfigError("sweep needs at least one value");
  const CorpusSplit split = synthetic_split(base);
  const TypeInventory types = synthetic_types();
  SweepResult result{axis, {}};
  for (double v : values) {
    SweepRow row;
    row.value = v;
    try {
      const RunConfig c = apply_axis(base, axis, v);
      const Experiment e = run_experiment(c, split, types);
      const Prf m = e.test.micro();
      row.accuracy = e.test.candidate_accuracy();
      row.precision = m.precision;
      row.recall = m.recall;
      row.f1 = m.f1;
      row.epochs = static_cast<int>(e.trained.log.epochs.size());
      row.seconds = e.seconds;
    } catch (const std::exception& ex) {
      row.failed = true;
      row.error = ex.what();
    }
    result.rows.push_back(row);
    if (on_row) on_row(row);
  }
  return result;
}

/// Trains with the structural term switched off (λ = 0) and at the config's
/// λ on the same split and seed, and reports subset metrics side by side.
struct AblationReport {
  double lambda = 0.0;
  EvalReport without_struct;
  EvalReport with_struct;
  TrainLog log_without;
  TrainLog log_with;

  /// Deterministic content only (no wall time).
  Json to_json() const {
    auto side = [](double l, const EvalReport& r) {
      auto opt = [](std::optional<double> v) { return v ? Json(*v) : Json("n/a"); };
      return Json{{"lambda", l},
                  {"micro_f1", r.micro().f1},
                  {"nested_f1", opt(r.subsets.nested.f1())},
                  {"nested_recall", opt(r.subsets.nested.recall())},
                  {"overlap_f1", opt(r.subsets.overlap.f1())},
                  {"overlap_recall", opt(r.subsets.overlap.recall())}};
    };
    const auto a = without_struct.subsets.nested.f1(), b = with_struct.subsets.nested.f1();
    Json j{{"without_struct", side(0.0, without_struct)}, {"with_struct", side(lambda, with_struct)}};
    j["nested_f1_delta"] = a && b ? Json(*b - *a) : Json("n/a");
    return j;
  }
};

inline AblationReport structural_ablation(const RunConfig& base, const CorpusSplit& split,
                                          const TypeInventory& types) {
  RunConfig off = base;
  off.lambda = 0.0;
  const Experiment a = run_experiment(off, split, types);
  const Experiment b = run_experiment(base, split, types);
  return {base.lambda, a.test, b.test, a.trained.log, b.trained.log};
}

}  // namespace structspan
