#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>

#include "json.hpp"
#include "uwfqa/classifier_config.hpp"
#include "uwfqa/preprocess.hpp"
#include "uwfqa/service.hpp"
#include "uwfqa/split.hpp"
#include "uwfqa/synthetic.hpp"
#include "uwfqa/training.hpp"

namespace uwfqa {

inline constexpr int kRunConfigVersion = 1;

struct CrossValConfig {
  std::size_t k = 5;
  double threshold = 0.5;
};

/// Everything a CLI run reads from its config file. Every section is
/// optional; `config_version` is not.
struct RunConfig {
  int config_version = kRunConfigVersion;
  PreprocessConfig preprocess;
  ClassifierConfig model;
  TrainConfig train;
  SplitRatios split;
  std::uint64_t split_seed = 0;
  CrossValConfig crossval;
  synth::SynthConfig synth;
  service::ServiceConfig service;

  /// Overrides every seed in the file.
  void set_seed(std::uint64_t seed);
  void validate() const;  // ConfigError
};

/// Strict: unknown keys anywhere and a missing or unsupported config_version
/// are ConfigErrors.
RunConfig run_config_from_json(const nlohmann::json& j);
RunConfig load_run_config(const std::filesystem::path& path);
nlohmann::ordered_json to_json(const RunConfig& cfg);

}  // namespace uwfqa
