#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "gmae/error.hpp"

namespace gmae {

// Everything a training run needs beyond the data itself. Field defaults are
// the recommended desk-scale settings; `k = 0` means "infer the cluster
// count from the labels".
struct TrainConfig {
  std::size_t d_z = 64;
  std::size_t d_c = 64;
  double alpha = 0.01;
  double beta = 0.01;
  std::size_t epochs = 500;
  double learning_rate = 1e-3;
  std::uint64_t seed = 42;
  std::size_t k = 0;
  std::size_t n_omega = 5;
  std::size_t neighbor_refresh = 10;
  double missing_ratio = 0.0;
  std::string pairing = "cycle";      // or "all_pairs"
  std::string normalize = "minmax";   // or "zscore" or "none"
  std::vector<std::size_t> hidden = {512, 256};
  std::vector<std::size_t> disc_hidden = {128};
  std::size_t batch_size = 0;         // 0 = full batch
};

inline void validate(const TrainConfig& c) {
  if (c.d_z == 0 || c.d_c == 0)
    throw ConfigError("config: d_z and d_c must be positive");
  if (!(c.alpha >= 0.0) || !std::isfinite(c.alpha))
    throw ConfigError("config: alpha must be finite and nonnegative");
  if (!(c.beta >= 0.0) || !std::isfinite(c.beta))
    throw ConfigError("config: beta must be finite and nonnegative");
  if (!(c.learning_rate > 0.0) || !std::isfinite(c.learning_rate))
    throw ConfigError("config: learning_rate must be positive");
  if (c.n_omega == 0) throw ConfigError("config: n_omega must be positive");
  if (c.neighbor_refresh == 0)
    throw ConfigError("config: neighbor_refresh must be positive");
  if (!(c.missing_ratio >= 0.0 && c.missing_ratio < 1.0))
    throw ConfigError("config: missing_ratio must lie in [0, 1)");
  if (c.pairing != "cycle" && c.pairing != "all_pairs")
    throw ConfigError("config: pairing must be \"cycle\" or \"all_pairs\"");
  if (c.normalize != "minmax" && c.normalize != "zscore" && c.normalize != "none")
    throw ConfigError("config: normalize must be \"minmax\", \"zscore\" or \"none\"");
  if (c.hidden.empty()) throw ConfigError("config: hidden widths must be nonempty");
  for (std::size_t h : c.hidden)
    if (h == 0) throw ConfigError("config: hidden widths must be positive");
  for (std::size_t h : c.disc_hidden)
    if (h == 0) throw ConfigError("config: disc_hidden widths must be positive");
}

inline nlohmann::json to_json(const TrainConfig& c) {
  return nlohmann::json{
      {"d_z", c.d_z},
      {"d_c", c.d_c},
      {"alpha", c.alpha},
      {"beta", c.beta},
      {"epochs", c.epochs},
      {"learning_rate", c.learning_rate},
      {"seed", c.seed},
      {"k", c.k},
      {"n_omega", c.n_omega},
      {"neighbor_refresh", c.neighbor_refresh},
      {"missing_ratio", c.missing_ratio},
      {"pairing", c.pairing},
      {"normalize", c.normalize},
      {"hidden", c.hidden},
      {"disc_hidden", c.disc_hidden},
      {"batch_size", c.batch_size},
  };
}

// Strict parse: every key must be known and well-typed; unknown keys are
// rejected by name so typos cannot silently fall back to defaults.
inline TrainConfig train_config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("config: top level must be a JSON object");
  TrainConfig c;
  auto get_count = [&](const nlohmann::json& v, const char* key) -> std::size_t {
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0))
      throw ConfigError(std::string("config: ") + key + " must be a nonnegative integer");
    return v.get<std::size_t>();
  };
  auto get_real = [&](const nlohmann::json& v, const char* key) -> double {
    if (!v.is_number())
      throw ConfigError(std::string("config: ") + key + " must be a number");
    return v.get<double>();
  };
  auto get_str = [&](const nlohmann::json& v, const char* key) -> std::string {
    if (!v.is_string())
      throw ConfigError(std::string("config: ") + key + " must be a string");
    return v.get<std::string>();
  };
  auto get_widths = [&](const nlohmann::json& v, const char* key) {
    if (!v.is_array())
      throw ConfigError(std::string("config: ") + key + " must be an array");
    std::vector<std::size_t> out;
    for (const auto& e : v) out.push_back(get_count(e, key));
    return out;
  };

  for (const auto& [key, val] : j.items()) {
    if (key == "d_z") c.d_z = get_count(val, "d_z");
    else if (key == "d_c") c.d_c = get_count(val, "d_c");
    else if (key == "alpha") c.alpha = get_real(val, "alpha");
    else if (key == "beta") c.beta = get_real(val, "beta");
    else if (key == "epochs") c.epochs = get_count(val, "epochs");
    else if (key == "learning_rate") c.learning_rate = get_real(val, "learning_rate");
    else if (key == "seed") c.seed = get_count(val, "seed");
    else if (key == "k") c.k = get_count(val, "k");
    else if (key == "n_omega") c.n_omega = get_count(val, "n_omega");
    else if (key == "neighbor_refresh") c.neighbor_refresh = get_count(val, "neighbor_refresh");
    else if (key == "missing_ratio") c.missing_ratio = get_real(val, "missing_ratio");
    else if (key == "pairing") c.pairing = get_str(val, "pairing");
    else if (key == "normalize") c.normalize = get_str(val, "normalize");
    else if (key == "hidden") c.hidden = get_widths(val, "hidden");
    else if (key == "disc_hidden") c.disc_hidden = get_widths(val, "disc_hidden");
    else if (key == "batch_size") c.batch_size = get_count(val, "batch_size");
    else throw ConfigError("config: unknown key \"" + key + "\"");
  }
  validate(c);
  return c;
}

inline TrainConfig load_train_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("config: cannot open " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config: invalid JSON in " + path + ": " + e.what());
  }
  return train_config_from_json(j);
}

}  // namespace gmae
