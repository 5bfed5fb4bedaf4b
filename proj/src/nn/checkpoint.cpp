#include "uwfqa/nn/checkpoint.hpp"

#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>

#include "uwfqa/digest.hpp"
#include "uwfqa/errors.hpp"

namespace uwfqa::nn {

std::array<std::string, kNumArtifacts> CheckpointMetadata::canonical_label_order() {
  std::array<std::string, kNumArtifacts> order;
  for (std::size_t c = 0; c < kNumArtifacts; ++c) order[c] = std::string(kArtifactNames[c]);
  return order;
}

nlohmann::ordered_json to_json(const CheckpointMetadata& meta) {
  nlohmann::ordered_json j;
  j["created_at"] = meta.created_at;
  j["train_config_digest"] = meta.train_config_digest;
  j["epoch_stopped"] = meta.epoch_stopped;
  j["best_epoch"] = meta.best_epoch;
  j["best_val_loss"] = std::isfinite(meta.best_val_loss) ? nlohmann::ordered_json(meta.best_val_loss)
                                                         : nlohmann::ordered_json(nullptr);
  j["validation_source"] = meta.validation_source;
  j["label_order"] = meta.label_order;
  return j;
}

CheckpointMetadata checkpoint_metadata_from_json(const nlohmann::json& j) {
  CheckpointMetadata m;
  m.created_at = j.value("created_at", "");
  m.train_config_digest = j.value("train_config_digest", "");
  m.epoch_stopped = j.value("epoch_stopped", -1);
  m.best_epoch = j.value("best_epoch", -1);
  if (j.contains("best_val_loss") && !j.at("best_val_loss").is_null()) {
    m.best_val_loss = j.at("best_val_loss").get<double>();
  }
  m.validation_source = j.value("validation_source", "");
  if (j.contains("label_order")) {
    m.label_order = j.at("label_order").get<std::array<std::string, kNumArtifacts>>();
  }
  return m;
}

std::string ModelCheckpoint::model_version() const {
  return "resnet50-" + weights_sha256.substr(0, 12);
}

std::filesystem::path sidecar_path(const std::filesystem::path& weights_path) {
  auto p = weights_path;
  p += ".json";
  return p;
}

std::string utc_now_iso8601() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string save_checkpoint(const ArtifactClassifier& model, const CheckpointMetadata& meta,
                            const std::filesystem::path& weights_path) {
  if (weights_path.has_parent_path()) std::filesystem::create_directories(weights_path.parent_path());
  try {
    torch::save(model.network(), weights_path.string());
  } catch (const std::exception& e) {
    throw CheckpointError("cannot write weights '" + weights_path.string() + "': " + e.what());
  }
  const std::string digest = sha256_file(weights_path);

  nlohmann::ordered_json side;
  side["format_version"] = kCheckpointFormatVersion;
  side["label_order"] = meta.label_order;
  side["config"] = to_json(model.config());
  side["metadata"] = to_json(meta);
  side["weights_sha256"] = digest;
  std::ofstream out(sidecar_path(weights_path));
  out << side.dump(2) << '\n';
  if (!out) throw CheckpointError("cannot write sidecar " + sidecar_path(weights_path).string());
  return digest;
}

ModelCheckpoint load_checkpoint(const std::filesystem::path& weights_path) {
  const auto side_path = sidecar_path(weights_path);
  std::ifstream in(side_path);
  if (!in) throw CheckpointError("missing checkpoint sidecar " + side_path.string());
  nlohmann::json side;
  try {
    in >> side;
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError("corrupted checkpoint sidecar " + side_path.string() + ": " + e.what());
  }

  try {
    const int found = side.at("format_version").get<int>();
    if (found != kCheckpointFormatVersion) {
      throw CheckpointError("checkpoint format version mismatch: expected " +
                            std::to_string(kCheckpointFormatVersion) + ", found " +
                            std::to_string(found));
    }
    const auto order = side.at("label_order").get<std::vector<std::string>>();
    const auto canonical = CheckpointMetadata::canonical_label_order();
    if (!std::equal(order.begin(), order.end(), canonical.begin(), canonical.end())) {
      throw CheckpointError("checkpoint label order " + side.at("label_order").dump() +
                            " differs from the canonical order");
    }

    ModelCheckpoint ckpt;
    ckpt.metadata = checkpoint_metadata_from_json(side.at("metadata"));
    ckpt.weights_sha256 = side.at("weights_sha256").get<std::string>();
    if (!std::filesystem::exists(weights_path)) {
      throw CheckpointError("missing checkpoint weights " + weights_path.string());
    }
    const std::string actual = sha256_file(weights_path);
    if (actual != ckpt.weights_sha256) {
      throw CheckpointError("corrupted checkpoint weights " + weights_path.string() +
                            ": digest mismatch");
    }

    ClassifierConfig cfg = classifier_config_from_json(side.at("config"));
    cfg.pretrained_init = false;  // weights come from the archive
    ckpt.model = build_classifier(cfg);
    try {
      torch::load(ckpt.model->network(), weights_path.string());
    } catch (const std::exception& e) {
      throw CheckpointError("corrupted checkpoint weights " + weights_path.string() + ": " +
                            e.what());
    }
    ckpt.model->eval_mode();
    return ckpt;
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError("malformed checkpoint sidecar " + side_path.string() + ": " + e.what());
  } catch (const ConfigError& e) {
    throw CheckpointError("checkpoint config invalid: " + std::string(e.what()));
  }
}

}  // namespace uwfqa::nn
