#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

#include "structspan/errors.hpp"

namespace structspan {

using Json = nlohmann::ordered_json;

/// Every hyperparameter of a run. Keys are flat and map one-to-one to CLI
/// flags (`learning_rate` <-> `--learning-rate`).
struct RunConfig {
  // encoder
  int hidden_dim = 64;
  int key_dim = 32;
  int ff_dim = 128;
  int encoder_layers = 2;
  bool encoder_rescale = false;
  // spans + structure
  int max_span_width = 8;
  bool struct_residual = false;
  double lambda = 0.1;
  double threshold = 0.5;
  // optimization
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  double clip_norm = 5.0;
  int batch_size = 8;
  int epochs = 30;
  std::uint64_t seed = 42;
  int threads = 1;
  // data
  int max_len = 64;
  double train_ratio = 0.8;
  double val_ratio = 0.1;
  double test_ratio = 0.1;
  std::string eval_split = "test";
  int synth_sentences = 2000;
  double synth_nesting_rate = 0.4;
  double synth_overlap_rate = 0.2;
  // gradient check
  double gradcheck_step = 1e-3;
  double gradcheck_tolerance = 1e-4;
  int gradcheck_samples = 64;
  int gradcheck_tokens = 6;

  bool operator==(const RunConfig&) const = default;

  /// Visits every key with a reference to its field. The single source of
  /// truth for serialization, parsing and flag registration.
  template <typename Self, typename Visitor>
  static void visit(Self& c, Visitor&& v) {
    v("hidden_dim", c.hidden_dim);
    v("key_dim", c.key_dim);
    v("ff_dim", c.ff_dim);
    v("encoder_layers", c.encoder_layers);
    v("encoder_rescale", c.encoder_rescale);
    v("max_span_width", c.max_span_width);
    v("struct_residual", c.struct_residual);
    v("lambda", c.lambda);
    v("threshold", c.threshold);
    v("learning_rate", c.learning_rate);
    v("beta1", c.beta1);
    v("beta2", c.beta2);
    v("adam_eps", c.adam_eps);
    v("clip_norm", c.clip_norm);
    v("batch_size", c.batch_size);
    v("epochs", c.epochs);
    v("seed", c.seed);
    v("threads", c.threads);
    v("max_len", c.max_len);
    v("train_ratio", c.train_ratio);
    v("val_ratio", c.val_ratio);
    v("test_ratio", c.test_ratio);
    v("eval_split", c.eval_split);
    v("synth_sentences", c.synth_sentences);
    v("synth_nesting_rate", c.synth_nesting_rate);
    v("synth_overlap_rate", c.synth_overlap_rate);
    v("gradcheck_step", c.gradcheck_step);
    v("gradcheck_tolerance", c.gradcheck_tolerance);
    v("gradcheck_samples", c.gradcheck_samples);
    v("gradcheck_tokens", c.gradcheck_tokens);
  }

  Json to_json() const {
    Json j = Json::object();
    visit(*this, [&](const char* key, const auto& field) { j[key] = field; });
    return j;
  }

  /// Overlays the keys present in `j`. Unknown keys and ill-typed values are
  /// rejected.
  void merge_json(const Json& j) {
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    for (auto it = j.begin(); it != j.end(); ++it) {
      bool known = false;
      visit(*this, [&](const char* key, auto& field) {
        if (it.key() != key) return;
        known = true;
        assign(key, field, it.value());
      });
      if (!known) throw ConfigError("unknown config key '" + it.key() + "'");
    }
  }

  static RunConfig from_json(const Json& j) {
    RunConfig c;
    c.merge_json(j);
    c.validate();
    return c;
  }

  static Json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path);
    try {
      return Json::parse(in);
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError("config file " + path + " is not valid JSON: " + e.what());
    }
  }

  void validate() const {
    auto require = [](bool ok, const std::string& msg) {
      if (!ok) throw ConfigError(msg);
    };
    require(hidden_dim >= 2, "hidden_dim must be >= 2");
    require(key_dim >= 1, "key_dim must be >= 1");
    require(ff_dim >= 1, "ff_dim must be >= 1");
    require(encoder_layers >= 1, "encoder_layers must be >= 1");
    require(max_span_width >= 1, "max_span_width must be >= 1");
    require(lambda >= 0.0 && std::isfinite(lambda), "lambda must be finite and >= 0");
    require(threshold > 0.0 && threshold <= 1.0, "threshold must be in (0, 1]");
    require(learning_rate >= 0.0 && std::isfinite(learning_rate), "learning_rate must be >= 0");
    require(beta1 >= 0.0 && beta1 < 1.0, "beta1 must be in [0, 1)");
    require(beta2 >= 0.0 && beta2 < 1.0, "beta2 must be in [0, 1)");
    require(adam_eps > 0.0, "adam_eps must be > 0");
    require(clip_norm >= 0.0, "clip_norm must be >= 0 (0 disables clipping)");
    require(batch_size >= 1, "batch_size must be >= 1");
    require(epochs >= 1, "epochs must be >= 1");
    require(threads >= 1, "threads must be >= 1");
    require(max_len > max_span_width, "max_len must exceed max_span_width");
    require(train_ratio > 0.0 && val_ratio > 0.0 && test_ratio > 0.0,
            "split ratios must all be positive");
    require(std::abs(train_ratio + val_ratio + test_ratio - 1.0) < 1e-9,
            "split ratios must sum to 1");
    require(eval_split == "test" || eval_split == "validation" || eval_split == "train" ||
                eval_split == "all",
            "eval_split must be one of test, validation, train, all");
    require(synth_sentences >= 1, "synth_sentences must be >= 1");
    require(synth_nesting_rate >= 0.0 && synth_nesting_rate <= 1.0,
            "synth_nesting_rate must be in [0, 1]");
    require(synth_overlap_rate >= 0.0 && synth_overlap_rate <= 1.0,
            "synth_overlap_rate must be in [0, 1]");
    require(gradcheck_step > 0.0, "gradcheck_step must be > 0");
    require(gradcheck_tolerance > 0.0, "gradcheck_tolerance must be > 0");
    require(gradcheck_samples >= 1, "gradcheck_samples must be >= 1");
    require(gradcheck_tokens >= 1 && gradcheck_tokens <= max_len,
            "gradcheck_tokens must be in [1, max_len]");
  }

 private:
  template <typename T>
  static void assign(const char* key, T& field, const Json& v) {
    const auto bad = [&] { throw ConfigError(std::string("config key '") + key + "' has wrong type"); };
    if constexpr (std::is_same_v<T, bool>) {
      if (!v.is_boolean()) bad();
      field = v.get<bool>();
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!v.is_string()) bad();
      field = v.get<std::string>();
    } else if constexpr (std::is_integral_v<T>) {
      if (!v.is_number_integer()) bad();
      if constexpr (std::is_unsigned_v<T>) {
        if (v.is_number_unsigned() || v.get<long long>() >= 0) field = v.get<T>();
        else bad();
      } else {
        field = v.get<T>();
      }
    } else {
      if (!v.is_number()) bad();
      field = v.get<T>();
    }
  }
};

}  // namespace structspan
