#pragma once

#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "structspan/config.hpp"
#include "structspan/errors.hpp"
#include "structspan/model.hpp"

namespace structspan {

inline constexpr const char* kCheckpointVersion = "1";

inline Json checkpoint_to_json(const Model& m) {
  Json params = Json::array();
  for (const auto& [name, t] : m.params)
    params.push_back(Json{{"name", name}, {"shape", t.shape()}, {"values", t.raw()}});
  return Json{{"format_version", kCheckpointVersion},
              {"config", m.config.to_json()},
              {"vocabulary", m.vocab.tokens()},
              {"types", m.types.names()},
              {"params", std::move(params)}};
}

inline void save_checkpoint(const Model& m, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw CheckpointError("cannot write checkpoint " + path);
  out << checkpoint_to_json(m).dump() << '\n';
}

/// Rebuilds a model. `config_override`, when given, is overlaid on the stored
/// config before the parameter shapes are validated, so a conflicting
/// dimension is reported against every parameter it breaks.
inline Model checkpoint_from_json(const Json& j, const Json* config_override = nullptr) {
  auto field = [&](const char* key) -> const Json& {
    if (!j.is_object() || !j.contains(key))
      throw CheckpointError(std::string("checkpoint is missing field '") + key + "'");
    return j.at(key);
  };
  const Json& version = field("format_version");
  if (!version.is_string() || version.get<std::string>() != kCheckpointVersion)
    throw CheckpointError("format_version: expected \"" + std::string(kCheckpointVersion) +
                          "\", got " + version.dump());

  Model m;
  try {
    m.config.merge_json(field("config"));
    if (config_override) m.config.merge_json(*config_override);
  } catch (const ConfigError& e) {
    throw CheckpointError(std::string("config: ") + e.what());
  }
  m.config.validate();

  try {
    m.vocab = Vocabulary::from_list(field("vocabulary").get<std::vector<std::string>>());
    m.types = TypeInventory(field("types").get<std::vector<std::string>>());
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError(std::string("vocabulary/types: ") + e.what());
  } catch (const ConfigError& e) {
    throw CheckpointError(std::string("types: ") + e.what());
  }

  const Json& params = field("params");
  if (!params.is_array()) throw CheckpointError("params: expected an array");
  std::map<std::string, const Json*> stored;
  for (const auto& p : params) {
    if (!p.is_object() || !p.contains("name") || !p.contains("shape") || !p.contains("values"))
      throw CheckpointError("params: every entry needs name, shape and values");
    stored[p["name"].get<std::string>()] = &p;
  }

  std::vector<std::string> problems;
  const auto expected = expected_shapes(m.config, m.vocab.size(), m.types.num_classes());
  for (const auto& [name, shape] : expected) {
    auto it = stored.find(name);
    if (it == stored.end()) {
      problems.push_back(name + " missing");
      continue;
    }
    Shape got;
    try {
      got = it->second->at("shape").get<Shape>();
    } catch (const nlohmann::json::exception&) {
      problems.push_back(name + " has a malformed shape");
      continue;
    }
    if (got != shape) {
      problems.push_back(name + " shape " + shape_str(got) + " != expected " + shape_str(shape));
      continue;
    }
    std::vector<double> values;
    try {
      values = it->second->at("values").get<std::vector<double>>();
    } catch (const nlohmann::json::exception&) {
      problems.push_back(name + " has non-numeric values");
      continue;
    }
    if (values.size() != shape_size(shape)) {
      problems.push_back(name + " has " + std::to_string(values.size()) + " values for shape " +
                         shape_str(shape));
      continue;
    }
    m.params.add(name, Tensor(shape, std::move(values)));
    stored.erase(it);
  }
  for (const auto& [name, _] : stored) problems.push_back(name + " is not a parameter of this model");
  if (!problems.empty()) {
    std::string msg = "shape mismatch: ";
    for (std::size_t i = 0; i < problems.size(); ++i) msg += (i ? "; " : "") + problems[i];
    throw CheckpointError(msg);
  }
  return m;
}

inline Model load_checkpoint(const std::string& path, const Json* config_override = nullptr) {
  std::ifstream in(path);
  if (!in) throw CheckpointError("cannot open checkpoint " + path);
  Json j;
  try {
    j = Json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError("checkpoint " + path + " is not valid JSON: " + e.what());
  }
  return checkpoint_from_json(j, config_override);
}

}  // namespace structspan
