#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>

#include "mtaoiqa/model.hpp"
#include "mtaoiqa/training.hpp"

namespace mtaoiqa {

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Declarative settings for training, evaluation and ablation runs.
struct RunConfig {
  std::filesystem::path manifest;  // images are resolved relative to its directory
  ModelConfig model;
  TrainConfig train;

  /// Resolved settings as JSON; from_json(to_json()) reproduces the config.
  std::string to_json() const;
  static RunConfig from_json(const std::string& text);
};

/// Overlays the keys of a JSON object onto `cfg`. Unknown keys, wrong types and invalid
/// values raise ConfigError naming the key.
void apply_json(RunConfig& cfg, const std::string& text);

RunConfig load_run_config(const std::filesystem::path& path);

/// Validates the model and training settings, rethrowing failures as ConfigError.
void validate(const RunConfig& cfg);

}  // namespace mtaoiqa
