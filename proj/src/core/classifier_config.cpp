#include "uwfqa/classifier_config.hpp"

#include <algorithm>
#include <array>
#include <cstdlib>
#include <string_view>

#include "uwfqa/errors.hpp"

namespace uwfqa {

void ClassifierConfig::validate() const {
  if (backbone != Backbone::kResidual50) throw ConfigError("model: unsupported backbone");
  if (num_outputs != static_cast<int>(kNumArtifacts)) {
    throw ConfigError("model: num_outputs must be " + std::to_string(kNumArtifacts));
  }
  if (input_side != 224) throw ConfigError("model: input_side must be 224");
}

std::filesystem::path default_pretrained_weights_path() {
  if (const char* env = std::getenv("UWFQA_PRETRAINED_WEIGHTS"); env && *env) return env;
  const char* home = std::getenv("HOME");
  return std::filesystem::path(home ? home : ".") / ".cache" / "uwfqa" / "resnet50_imagenet.pt";
}

nlohmann::json to_json(const ClassifierConfig& cfg) {
  return {{"backbone", "residual_50"},
          {"num_outputs", cfg.num_outputs},
          {"pretrained_init", cfg.pretrained_init},
          {"input_side", cfg.input_side},
          {"pretrained_weights", cfg.pretrained_weights.string()},
          {"init_seed", cfg.init_seed}};
}

ClassifierConfig classifier_config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("model: expected an object");
  static const std::array<std::string_view, 6> kKnown = {
      "backbone", "num_outputs", "pretrained_init", "input_side", "pretrained_weights", "init_seed"};
  for (const auto& [k, _] : j.items()) {
    if (std::find(kKnown.begin(), kKnown.end(), k) == kKnown.end()) {
      throw ConfigError("model: unknown key '" + k + "'");
    }
  }
  ClassifierConfig cfg;
  try {
    if (j.contains("backbone") && j.at("backbone").get<std::string>() != "residual_50") {
      throw ConfigError("model: unsupported backbone " + j.at("backbone").dump());
    }
    if (j.contains("num_outputs")) cfg.num_outputs = j.at("num_outputs").get<int>();
    if (j.contains("pretrained_init")) cfg.pretrained_init = j.at("pretrained_init").get<bool>();
    if (j.contains("input_side")) cfg.input_side = j.at("input_side").get<int>();
    if (j.contains("pretrained_weights")) {
      cfg.pretrained_weights = j.at("pretrained_weights").get<std::string>();
    }
    if (j.contains("init_seed")) cfg.init_seed = j.at("init_seed").get<std::uint64_t>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("model: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

}  // namespace uwfqa
