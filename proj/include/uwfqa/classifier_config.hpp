#pragma once

#include <cstdint>
#include <filesystem>

#include "json.hpp"
#include "uwfqa/labels.hpp"

namespace uwfqa {

enum class Backbone { kResidual50 };

struct ClassifierConfig {
  Backbone backbone = Backbone::kResidual50;
  int num_outputs = static_cast<int>(kNumArtifacts);
  bool pretrained_init = true;
  int input_side = 224;
  /// torchvision-keyed ResNet-50 state dict (torch.save format). Empty means
  /// default_pretrained_weights_path().
  std::filesystem::path pretrained_weights;
  /// Seeds the head and, without pretrained weights, the backbone.
  std::uint64_t init_seed = 0;

  void validate() const;  // ConfigError
};

/// $UWFQA_PRETRAINED_WEIGHTS, else ~/.cache/uwfqa/resnet50_imagenet.pt.
std::filesystem::path default_pretrained_weights_path();

nlohmann::json to_json(const ClassifierConfig& cfg);
ClassifierConfig classifier_config_from_json(const nlohmann::json& j);

}  // namespace uwfqa
