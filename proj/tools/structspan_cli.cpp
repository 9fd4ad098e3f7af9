// Command-line entry point: gen-data, train, eval, predict, gradcheck, sweep.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "structspan/checkpoint.hpp"
#include "structspan/config.hpp"
#include "structspan/corpus.hpp"
#include "structspan/evaluation.hpp"
#include "structspan/model_gradcheck.hpp"
#include "structspan/sweep.hpp"
#include "structspan/synthetic.hpp"
#include "structspan/trainer.hpp"

namespace fs = std::filesystem;
using namespace structspan;

namespace {

constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;

std::string flag_name(const std::string& key) {
  std::string f = "--" + key;
  std::replace(f.begin(), f.end(), '_', '-');
  return f;
}

/// Flags shared by every command: --config, --out and one flag per config key.
struct CommonOptions {
  std::string config_path;
  std::string out_dir = ".";
  std::map<std::string, std::string> raw;  // config key -> flag text

  void attach(CLI::App* cmd) {
    cmd->add_option("--config", config_path, "JSON config file (flat keys)");
    cmd->add_option("--out", out_dir, "output directory")->capture_default_str();
    RunConfig defaults;
    RunConfig::visit(defaults, [&](const char* key, const auto& field) {
      std::ostringstream def;
      def << Json(field).dump();
      cmd->add_option_function<std::string>(
             flag_name(key), [this, k = std::string(key)](const std::string& v) { raw[k] = v; },
             "config key " + std::string(key) + " (default " + def.str() + ")");
    });
  }

  /// Flag overrides as typed JSON.
  Json overrides() const {
    Json j = Json::object();
    RunConfig probe;
    RunConfig::visit(probe, [&](const char* key, const auto& field) {
      auto it = raw.find(key);
      if (it == raw.end()) return;
      using T = std::decay_t<decltype(field)>;
      const std::string& s = it->second;
      try {
        if constexpr (std::is_same_v<T, bool>) {
          if (s == "true" || s == "1") j[key] = true;
          else if (s == "false" || s == "0") j[key] = false;
          else throw std::invalid_argument(s);
        } else if constexpr (std::is_same_v<T, std::string>) {
          j[key] = s;
        } else if constexpr (std::is_same_v<T, std::uint64_t>) {
          std::size_t pos = 0;
          const unsigned long long v = std::stoull(s, &pos);
          if (pos != s.size() || s.front() == '-') throw std::invalid_argument(s);
          j[key] = v;
        } else if constexpr (std::is_integral_v<T>) {
          std::size_t pos = 0;
          const long long v = std::stoll(s, &pos);
          if (pos != s.size()) throw std::invalid_argument(s);
          j[key] = v;
        } else {
          std::size_t pos = 0;
          const double v = std::stod(s, &pos);
          if (pos != s.size()) throw std::invalid_argument(s);
          j[key] = v;
        }
      } catch (const std::logic_error&) {
        throw ConfigError("flag " + flag_name(key) + " has invalid value '" + s + "'");
      }
    });
    return j;
  }

  /// File keys, then flags on top (flags win).
  Json layered() const {
    Json j = config_path.empty() ? Json::object() : RunConfig::read_json_file(config_path);
    if (!j.is_object()) throw ConfigError("config file must hold a JSON object");
    const Json flags = overrides();
    for (auto it = flags.begin(); it != flags.end(); ++it) j[it.key()] = it.value();
    return j;
  }

  RunConfig resolve() const { return RunConfig::from_json(layered()); }

  fs::path out() const {
    fs::create_directories(out_dir);
    return fs::path(out_dir);
  }
};

void echo_config(const RunConfig& c, const fs::path& out) {
  const std::string text = c.to_json().dump(2);
  std::cout << "resolved config:\n" << text << "\n";
  std::ofstream(out / "config.json") << text << '\n';
}

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream f(p, std::ios::binary);
  if (!f) throw DataError("cannot write " + p.string());
  f << text;
}

/// Corpus from --data, or the config's synthetic corpus.
std::vector<Sentence> load_corpus(const std::string& data, const RunConfig& c,
                                  const TypeInventory* types) {
  if (data.empty()) return gen_synthetic(synthetic_config(c), c.seed);
  std::vector<std::string> warnings;
  auto corpus = load_jsonl(data, types, &warnings);
  for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";
  if (corpus.empty()) throw DataError("corpus " + data + " is empty");
  return corpus;
}

std::vector<Sentence> select_split(const std::vector<Sentence>& corpus, const RunConfig& c) {
  if (c.eval_split == "all") return corpus;
  CorpusSplit s = split_corpus(corpus, split_ratios(c), c.seed);
  if (c.eval_split == "train") return s.train;
  if (c.eval_split == "validation") return s.validation;
  return s.test;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Span-based nested and overlapping entity extraction with structured attention"};
  app.require_subcommand(1);

  CommonOptions gen_opts, train_opts, eval_opts, predict_opts, grad_opts, sweep_opts;
  std::string train_data, eval_data, eval_ckpt, predict_data, predict_ckpt;
  std::string sweep_axis = "learning-rate";
  std::vector<double> sweep_values;

  auto* gen = app.add_subcommand("gen-data", "write the synthetic corpus as JSON lines");
  gen_opts.attach(gen);

  auto* tr = app.add_subcommand("train", "train a model; writes checkpoint.json and trainlog.json");
  train_opts.attach(tr);
  tr->add_option("--data", train_data, "JSONL corpus (default: synthetic corpus from config)");

  auto* ev = app.add_subcommand("eval", "evaluate a checkpoint; writes eval.json");
  eval_opts.attach(ev);
  ev->add_option("--checkpoint", eval_ckpt, "checkpoint.json")->required();
  ev->add_option("--data", eval_data, "JSONL corpus (default: synthetic corpus from config)");

  auto* pr = app.add_subcommand("predict", "decode a corpus; writes predictions.jsonl");
  predict_opts.attach(pr);
  pr->add_option("--checkpoint", predict_ckpt, "checkpoint.json")->required();
  pr->add_option("--data", predict_data, "JSONL corpus (default: synthetic corpus from config)");

  auto* gc = app.add_subcommand("gradcheck", "finite-difference check of the joint loss");
  grad_opts.attach(gc);

  auto* sw = app.add_subcommand("sweep", "train one model per value; writes sweep.csv");
  sweep_opts.attach(sw);
  sw->add_option("--axis", sweep_axis, "learning-rate or hidden-dim")->capture_default_str();
  sw->add_option("--values", sweep_values, "values to sweep (default: built-in grid)")
      ->delimiter(',');

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*gen) {
      const RunConfig c = gen_opts.resolve();
      const fs::path out = gen_opts.out();
      echo_config(c, out);
      const auto corpus = gen_synthetic(synthetic_config(c), c.seed);
      save_jsonl((out / "corpus.jsonl").string(), corpus);
      std::cout << "wrote " << corpus.size() << " sentences to " << (out / "corpus.jsonl").string()
                << "\n";
    } else if (*tr) {
      const RunConfig c = train_opts.resolve();
      const fs::path out = train_opts.out();
      echo_config(c, out);
      const auto corpus = load_corpus(train_data, c, nullptr);
      const TypeInventory types = train_data.empty() ? synthetic_types() : infer_types(corpus);
      const CorpusSplit split = split_corpus(corpus, split_ratios(c), c.seed);
      std::cout << "split: " << split.train.size() << " train / " << split.validation.size()
                << " validation / " << split.test.size() << " test\n";
      Model init = init_model(c, Vocabulary::build(split.train), types);
      const TrainResult r = train(split.train, split.validation, std::move(init),
                                  [](const EpochRecord& e) {
                                    std::printf("epoch %3d  loss %.6f (cls %.6f, struct %.6f)  val_f1 %.4f  %.1fs\n",
                                                e.epoch, e.total, e.cls, e.structural, e.val_f1, e.seconds);
                                    std::fflush(stdout);
                                  });
      save_checkpoint(r.model, (out / "checkpoint.json").string());
      write_text(out / "trainlog.json", r.log.to_json().dump(2) + "\n");
      std::cout << "best epoch " << r.log.best_epoch << "; wrote checkpoint.json, trainlog.json\n";
    } else if (*ev) {
      const Json overrides = eval_opts.layered();
      const Model m = load_checkpoint(eval_ckpt, &overrides);
      const fs::path out = eval_opts.out();
      echo_config(m.config, out);
      const auto corpus = load_corpus(eval_data, m.config, &m.types);
      const EvalReport report = evaluate_corpus(m, select_split(corpus, m.config));
      const std::string text = report.to_json().dump(2);
      write_text(out / "eval.json", text + "\n");
      std::cout << text << "\n";
    } else if (*pr) {
      const Json overrides = predict_opts.layered();
      const Model m = load_checkpoint(predict_ckpt, &overrides);
      const fs::path out = predict_opts.out();
      echo_config(m.config, out);
      const auto corpus = load_corpus(predict_data, m.config, &m.types);
      const auto sentences = predict_data.empty() ? select_split(corpus, m.config) : corpus;
      std::ostringstream lines;
      for (const auto& s : sentences)
        lines << prediction_json(s.id, predict_sentence(m, s), m.types).dump() << '\n';
      write_text(out / "predictions.jsonl", lines.str());
      std::cout << "wrote predictions for " << sentences.size() << " sentences\n";
    } else if (*gc) {
      const RunConfig c = grad_opts.resolve();
      echo_config(c, grad_opts.out());
      const GradReport r = check_model_gradients(c);
      for (const auto& [name, err] : r.max_rel_error)
        std::printf("%-28s max_rel_err %.3e  (%zu coords)\n", name.c_str(), err,
                    r.coords_checked.at(name));
      std::printf("step %.1e  tolerance %.1e  worst %.3e  %s\n", r.step, r.tolerance, r.worst(),
                  r.pass ? "PASS" : "FAIL");
      return r.pass ? 0 : kExitFailure;
    } else if (*sw) {
      const RunConfig c = sweep_opts.resolve();
      const fs::path out = sweep_opts.out();
      echo_config(c, out);
      const SweepAxis axis = parse_axis(sweep_axis);
      const auto values = sweep_values.empty() ? default_grid(axis) : sweep_values;
      const SweepResult r = sweep(axis, values, c, [](const SweepRow& row) {
        if (row.failed)
          std::printf("value %g failed: %s\n", row.value, row.error.c_str());
        else
          std::printf("value %g  f1 %.4f  recall %.4f  %.1fs\n", row.value, row.f1, row.recall,
                      row.seconds);
        std::fflush(stdout);
      });
      write_text(out / "sweep.csv", r.csv());
      std::cout << r.csv();
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.kind() << ": " << e.what() << "\n";
    return kExitFailure;
  } catch (const std::exception& e) {
    std::cerr << "error: internal: " << e.what() << "\n";
    return kExitFailure;
  }
  return 0;
}
