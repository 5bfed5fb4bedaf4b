#include "uwfqa/training.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <limits>

#include "uwfqa/digest.hpp"
#include "uwfqa/errors.hpp"
#include "uwfqa/evaluation.hpp"

namespace uwfqa {

void TrainConfig::validate() const {
  const auto fail = [](const std::string& m) { throw ConfigError("train: " + m); };
  if (!(lr0 > 0.0) || !std::isfinite(lr0)) fail("lr0 must be positive");
  if (!(lr_decay_factor > 0.0) || lr_decay_factor > 1.0) fail("lr_decay_factor must be in (0, 1]");
  if (lr_decay_every <= 0) fail("lr_decay_every must be positive");
  if (!(momentum >= 0.0) || momentum >= 1.0) fail("momentum must be in [0, 1)");
  if (max_epochs <= 0) fail("max_epochs must be positive");
  if (patience <= 0) fail("patience must be positive");
  if (patience >= max_epochs) fail("patience must be smaller than max_epochs");
  if (!(min_improvement >= 0.0)) fail("min_improvement must be non-negative");
  if (batch_size <= 0) fail("batch_size must be positive");
  if (pos_weights) {
    for (double w : *pos_weights) {
      if (!(w > 0.0) || !std::isfinite(w)) fail("pos_weights must be positive");
    }
  }
  if (!(final_holdout_frac > 0.0) || final_holdout_frac >= 1.0) {
    fail("final_holdout_frac must be in (0, 1)");
  }
  try {
    augmentation.validate();
  } catch (const ArgumentError& e) {
    fail(std::string("augmentation: ") + e.what());
  }
}

std::string TrainConfig::digest() const { return sha256_hex(to_json(*this).dump()); }

nlohmann::ordered_json to_json(const TrainConfig& cfg) {
  nlohmann::ordered_json j;
  j["lr0"] = cfg.lr0;
  j["lr_decay_factor"] = cfg.lr_decay_factor;
  j["lr_decay_every"] = cfg.lr_decay_every;
  j["momentum"] = cfg.momentum;
  j["max_epochs"] = cfg.max_epochs;
  j["patience"] = cfg.patience;
  j["min_improvement"] = cfg.min_improvement;
  j["batch_size"] = cfg.batch_size;
  j["seed"] = cfg.seed;
  j["pos_weights"] = cfg.pos_weights ? nlohmann::ordered_json(*cfg.pos_weights)
                                     : nlohmann::ordered_json("auto");
  j["augment"] = cfg.augment;
  const auto& a = cfg.augmentation;
  j["augmentation"] = {{"rotation_deg", a.rotation_deg},   {"translate_frac", a.translate_frac},
                       {"scale_min", a.scale_min},         {"scale_max", a.scale_max},
                       {"hflip_prob", a.hflip_prob},       {"fill_value", a.fill_value}};
  j["final_holdout_frac"] = cfg.final_holdout_frac;
  return j;
}

namespace {

template <typename T>
void read_if(const nlohmann::json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

void reject_unknown(const nlohmann::json& j, std::initializer_list<std::string_view> known,
                    std::string_view section) {
  for (const auto& [k, _] : j.items()) {
    if (std::find(known.begin(), known.end(), k) == known.end()) {
      throw ConfigError(std::string(section) + ": unknown key '" + k + "'");
    }
  }
}

}  // namespace

TrainConfig train_config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("train: expected an object");
  reject_unknown(j,
                 {"lr0", "lr_decay_factor", "lr_decay_every", "momentum", "max_epochs", "patience",
                  "min_improvement", "batch_size", "seed", "pos_weights", "augment",
                  "augmentation", "final_holdout_frac"},
                 "train");
  TrainConfig cfg;
  try {
    read_if(j, "lr0", cfg.lr0);
    read_if(j, "lr_decay_factor", cfg.lr_decay_factor);
    read_if(j, "lr_decay_every", cfg.lr_decay_every);
    read_if(j, "momentum", cfg.momentum);
    read_if(j, "max_epochs", cfg.max_epochs);
    read_if(j, "patience", cfg.patience);
    read_if(j, "min_improvement", cfg.min_improvement);
    read_if(j, "batch_size", cfg.batch_size);
    read_if(j, "seed", cfg.seed);
    read_if(j, "augment", cfg.augment);
    read_if(j, "final_holdout_frac", cfg.final_holdout_frac);
    if (j.contains("pos_weights")) {
      const auto& pw = j.at("pos_weights");
      if (pw.is_string()) {
        if (pw.get<std::string>() != "auto") throw ConfigError("train: pos_weights must be \"auto\" or 6 numbers");
      } else {
        cfg.pos_weights = pw.get<ClassWeights>();
      }
    }
    if (j.contains("augmentation")) {
      const auto& a = j.at("augmentation");
      reject_unknown(a,
                     {"rotation_deg", "translate_frac", "scale_min", "scale_max", "hflip_prob",
                      "fill_value"},
                     "train.augmentation");
      read_if(a, "rotation_deg", cfg.augmentation.rotation_deg);
      read_if(a, "translate_frac", cfg.augmentation.translate_frac);
      read_if(a, "scale_min", cfg.augmentation.scale_min);
      read_if(a, "scale_max", cfg.augmentation.scale_max);
      read_if(a, "hflip_prob", cfg.augmentation.hflip_prob);
      read_if(a, "fill_value", cfg.augmentation.fill_value);
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("train: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

double lr_at_epoch(int epoch, const TrainConfig& cfg) {
  const int steps = epoch / cfg.lr_decay_every;
  return cfg.lr0 * std::pow(cfg.lr_decay_factor, steps);
}

ClassWeights class_pos_weights(std::span<const ArtifactLabelVector> train_labels) {
  constexpr double kMin = 0.1;
  constexpr double kMax = 100.0;
  ClassWeights w{};
  const double n = static_cast<double>(train_labels.size());
  for (std::size_t c = 0; c < kNumArtifacts; ++c) {
    double pos = 0.0;
    for (const auto& l : train_labels) pos += l.test(c) ? 1.0 : 0.0;
    const double neg = n - pos;
    if (pos == 0.0 || neg == 0.0) {
      w[c] = pos == 0.0 ? kMax : kMin;
      spdlog::warn("class {} has {} positives and {} negatives in the training split; "
                   "positive weight clamped to {}",
                   kArtifactNames[c], pos, neg, w[c]);
      continue;
    }
    w[c] = neg / pos;
  }
  return w;
}

nlohmann::ordered_json to_json(const EpochStats& s) {
  nlohmann::ordered_json j;
  j["epoch"] = s.epoch;
  j["train_loss"] = s.train_loss;
  j["val_loss"] = s.val_loss;
  j["lr"] = s.lr;
  j["per_class_val_accuracy"] = s.per_class_val_accuracy;
  return j;
}

EarlyStopping::EarlyStopping(int patience, double min_improvement)
    : patience_(patience),
      min_improvement_(min_improvement),
      best_loss_(std::numeric_limits<double>::infinity()) {}

bool EarlyStopping::observe(int epoch, double val_loss) {
  if (best_epoch_ < 0 || val_loss < best_loss_ - min_improvement_) {
    best_loss_ = val_loss;
    best_epoch_ = epoch;
    stale_epochs_ = 0;
    return true;
  }
  ++stale_epochs_;
  return false;
}

LoopResult run_epochs(EpochRunner& runner, const TrainConfig& cfg, const EpochCallback& on_epoch) {
  cfg.validate();
  EarlyStopping stopper(cfg.patience, cfg.min_improvement);
  LoopResult result;
  for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    EpochStats stats;
    stats.epoch = epoch;
    stats.lr = lr_at_epoch(epoch, cfg);
    stats.train_loss = runner.train_epoch(epoch, stats.lr);
    const ValidationResult val = runner.validate(epoch);
    stats.val_loss = val.loss;
    stats.per_class_val_accuracy = val.per_class_accuracy;
    if (!std::isfinite(stats.train_loss) || !std::isfinite(stats.val_loss)) {
      throw TrainingAbort("non-finite loss at epoch " + std::to_string(epoch) +
                          " (train " + std::to_string(stats.train_loss) + ", val " +
                          std::to_string(stats.val_loss) + ")");
    }
    result.history.push_back(stats);
    if (stopper.observe(epoch, stats.val_loss)) runner.capture_best(epoch);
    if (on_epoch) on_epoch(stats);
    if (stopper.should_stop()) {
      result.stopped_early = true;
      break;
    }
  }
  result.best_epoch = stopper.best_epoch();
  result.best_val_loss = stopper.best_loss();
  runner.restore_best();
  return result;
}

std::array<double, kNumArtifacts> per_class_accuracy(std::span<const ArtifactLabelVector> preds,
                                                     std::span<const ArtifactLabelVector> truth) {
  std::array<double, kNumArtifacts> acc{};
  if (preds.empty()) return acc;
  const auto conf = confusion_all(preds, truth);
  for (std::size_t c = 0; c < kNumArtifacts; ++c) acc[c] = *metrics(conf[c]).accuracy;
  return acc;
}

CvResult cross_validate(std::span<const ArtifactLabelVector> train_plus_val, std::size_t k,
                        std::uint64_t seed, const FoldEvaluator& evaluate_fold) {
  const auto folds = kfold_partition(train_plus_val, k, seed);
  CvResult cv;
  for (std::size_t f = 0; f < folds.size(); ++f) {
    cv.fold_accuracy.push_back(evaluate_fold(f, folds[f].fit, folds[f].holdout));
  }
  return cv;
}

}  // namespace uwfqa
