#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "uwfqa/augment.hpp"
#include "uwfqa/labels.hpp"
#include "uwfqa/report.hpp"
#include "uwfqa/scores.hpp"
#include "uwfqa/split.hpp"

namespace uwfqa {

using ClassWeights = std::array<double, kNumArtifacts>;

struct TrainConfig {
  double lr0 = 5e-3;
  double lr_decay_factor = 0.9;
  int lr_decay_every = 10;
  double momentum = 0.9;
  int max_epochs = 500;
  int patience = 5;
  double min_improvement = 1e-6;
  int batch_size = 16;
  std::uint64_t seed = 0;
  std::optional<ClassWeights> pos_weights;  // nullopt = derived from the training split
  bool augment = true;
  AugmentConfig augmentation;
  /// Fraction of the input carved out to drive early stopping in fit_final.
  double final_holdout_frac = 0.10;

  void validate() const;  // ConfigError
  /// SHA-256 of the canonical JSON form.
  std::string digest() const;
};

nlohmann::ordered_json to_json(const TrainConfig& cfg);
TrainConfig train_config_from_json(const nlohmann::json& j);

/// lr0 * decay^floor(epoch / every), epoch counted from 0.
double lr_at_epoch(int epoch, const TrainConfig& cfg);

/// w_c = negatives_c / positives_c over the given (training) labels. A class
/// without positives or negatives is clamped to [0.1, 100] with a warning.
ClassWeights class_pos_weights(std::span<const ArtifactLabelVector> train_labels);

struct EpochStats {
  int epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
  double lr = 0.0;
  std::array<double, kNumArtifacts> per_class_val_accuracy{};
};

nlohmann::ordered_json to_json(const EpochStats& s);

/// Tracks the best validation loss; an epoch counts as an improvement only
/// if it beats the best by more than `min_improvement`.
class EarlyStopping {
 public:
  explicit EarlyStopping(int patience, double min_improvement = 1e-6);

  /// Returns true when this epoch is the new best.
  bool observe(int epoch, double val_loss);
  bool should_stop() const { return stale_epochs_ >= patience_; }

  int best_epoch() const { return best_epoch_; }
  double best_loss() const { return best_loss_; }
  int stale_epochs() const { return stale_epochs_; }

 private:
  int patience_;
  double min_improvement_;
  int best_epoch_ = -1;
  double best_loss_;
  int stale_epochs_ = 0;
};

struct ValidationResult {
  double loss = 0.0;
  std::array<double, kNumArtifacts> per_class_accuracy{};
};

/// What one epoch of training needs from a model. The real implementation
/// drives a network; tests substitute scripted sequences.
class EpochRunner {
 public:
  virtual ~EpochRunner() = default;
  /// One pass over the training data at the given learning rate; returns the
  /// mean training loss.
  virtual double train_epoch(int epoch, double lr) = 0;
  virtual ValidationResult validate(int epoch) = 0;
  /// Remember the current parameters as the best so far.
  virtual void capture_best(int epoch) = 0;
  /// Reinstate the parameters remembered by capture_best.
  virtual void restore_best() = 0;
};

struct LoopResult {
  std::vector<EpochStats> history;
  int best_epoch = -1;
  double best_val_loss = 0.0;
  bool stopped_early = false;
};

using EpochCallback = std::function<void(const EpochStats&)>;

/// The schedule + early-stopping loop. Runs at most max_epochs, stops after
/// `patience` consecutive non-improving epochs and leaves the runner holding
/// the best-validation-loss parameters. Throws TrainingAbort on a non-finite
/// loss.
LoopResult run_epochs(EpochRunner& runner, const TrainConfig& cfg,
                      const EpochCallback& on_epoch = {});

/// Per-class accuracies of one fold's model on the fixed evaluation set.
using FoldEvaluator = std::function<std::array<double, kNumArtifacts>(
    std::size_t fold_index, std::span<const std::size_t> fit,
    std::span<const std::size_t> holdout)>;

/// k-fold driver: partitions the labels, calls `evaluate_fold` per fold and
/// collects the k x 6 accuracy matrix.
CvResult cross_validate(std::span<const ArtifactLabelVector> train_plus_val, std::size_t k,
                        std::uint64_t seed, const FoldEvaluator& evaluate_fold);

/// Per-class accuracy of predictions against truth.
std::array<double, kNumArtifacts> per_class_accuracy(std::span<const ArtifactLabelVector> preds,
                                                     std::span<const ArtifactLabelVector> truth);

}  // namespace uwfqa
