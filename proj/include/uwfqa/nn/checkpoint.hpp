#pragma once

#include <array>
#include <filesystem>
#include <limits>
#include <memory>
#include <string>

#include "json.hpp"
#include "uwfqa/nn/classifier.hpp"

namespace uwfqa::nn {

inline constexpr int kCheckpointFormatVersion = 1;

struct CheckpointMetadata {
  std::string created_at;  // ISO-8601 UTC
  std::string train_config_digest;
  int epoch_stopped = -1;
  int best_epoch = -1;
  double best_val_loss = std::numeric_limits<double>::quiet_NaN();
  std::string validation_source;  // what drove early stopping
  std::array<std::string, kNumArtifacts> label_order = canonical_label_order();

  static std::array<std::string, kNumArtifacts> canonical_label_order();
};

nlohmann::ordered_json to_json(const CheckpointMetadata& meta);
CheckpointMetadata checkpoint_metadata_from_json(const nlohmann::json& j);

struct ModelCheckpoint {
  std::shared_ptr<ArtifactClassifier> model;
  CheckpointMetadata metadata;
  std::string weights_sha256;

  /// "resnet50-<first 12 hex of the weights digest>".
  std::string model_version() const;
};

/// `<weights>.json`
std::filesystem::path sidecar_path(const std::filesystem::path& weights_path);

/// Writes the weights archive and its JSON sidecar
/// {format_version, label_order, config, metadata, weights_sha256}.
/// Returns the weights digest.
std::string save_checkpoint(const ArtifactClassifier& model, const CheckpointMetadata& meta,
                            const std::filesystem::path& weights_path);

/// Throws CheckpointError on a missing/corrupt file, a format version other
/// than kCheckpointFormatVersion, or a label order other than canonical.
ModelCheckpoint load_checkpoint(const std::filesystem::path& weights_path);

std::string utc_now_iso8601();

}  // namespace uwfqa::nn
