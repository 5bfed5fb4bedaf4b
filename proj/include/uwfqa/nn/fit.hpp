#pragma once

#include <cstddef>
#include <functional>
#include <string>

#include "uwfqa/dataset.hpp"
#include "uwfqa/nn/checkpoint.hpp"
#include "uwfqa/nn/classifier.hpp"
#include "uwfqa/training.hpp"

namespace uwfqa::nn {

struct FitOutcome {
  LoopResult loop;
  ClassWeights pos_weights{};
  CheckpointMetadata metadata;  // ready to pass to save_checkpoint
};

/// Trains `model` in place with weighted BCE, SGD with momentum, the stepped
/// learning-rate schedule and early stopping on `val`. Augmentation touches
/// the training images only. On return the model holds the parameters of the
/// best validation epoch. Throws ArgumentError for empty splits and
/// TrainingAbort for non-finite losses or gradients.
FitOutcome fit(ArtifactClassifier& model, const LabeledImages& train, const LabeledImages& val,
               const TrainConfig& cfg, const EpochCallback& on_epoch = {});

/// round-half-up(frac * n), at least 1.
std::size_t final_holdout_size(std::size_t n, double frac);

/// Trains on every non-test record. A stratified holdout of
/// cfg.final_holdout_frac is carved out only to drive early stopping; the
/// metadata records that choice.
FitOutcome fit_final(ArtifactClassifier& model, const LabeledImages& all_non_test,
                     const TrainConfig& cfg, const EpochCallback& on_epoch = {});

using FoldCallback = std::function<void(std::size_t fold, const FitOutcome&)>;

/// k-fold cross-validation with a freshly built classifier per fold; each
/// fold is fitted on k-1 parts, early-stopped on its held-out part and scored
/// on `eval_set` at `threshold`.
CvResult cross_validate_classifier(const ClassifierConfig& model_cfg,
                                   const LabeledImages& train_plus_val,
                                   const LabeledImages& eval_set, const TrainConfig& cfg,
                                   std::size_t k, double threshold = 0.5,
                                   const FoldCallback& on_fold = {});

}  // namespace uwfqa::nn
