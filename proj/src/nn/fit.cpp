#include "uwfqa/nn/fit.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "uwfqa/errors.hpp"
#include "uwfqa/evaluation.hpp"
#include "uwfqa/log.hpp"
#include "uwfqa/nn/loss.hpp"
#include "uwfqa/nn/optimizer.hpp"
#include "uwfqa/rng.hpp"

namespace uwfqa::nn {
namespace {

constexpr std::uint64_t kShuffleStream = 0x73687566ULL;
constexpr std::uint64_t kHoldoutStream = 0x686f6c64ULL;

torch::Tensor label_tensor(std::span<const ArtifactLabelVector> labels) {
  auto t = torch::zeros({static_cast<long>(labels.size()), static_cast<long>(kNumArtifacts)},
                        torch::kFloat32);
  auto acc = t.accessor<float, 2>();
  for (std::size_t i = 0; i < labels.size(); ++i) {
    for (std::size_t c = 0; c < kNumArtifacts; ++c) acc[i][c] = labels[i].test(c) ? 1.f : 0.f;
  }
  return t;
}

std::vector<std::pair<std::string, torch::Tensor>> trainable(ArtifactClassifier& model) {
  std::vector<std::pair<std::string, torch::Tensor>> out;
  for (auto& p : model.network()->named_parameters()) {
    if (p.value().requires_grad()) out.emplace_back(p.key(), p.value());
  }
  return out;
}

class NetworkRunner : public EpochRunner {
 public:
  NetworkRunner(ArtifactClassifier& model, const LabeledImages& train, const LabeledImages& val,
                const TrainConfig& cfg, const ClassWeights& pos_weights)
      : model_(model),
        train_(train),
        val_(val),
        cfg_(cfg),
        augmenter_(cfg.augmentation),
        pos_weights_(torch::tensor(std::vector<double>(pos_weights.begin(), pos_weights.end()),
                                   torch::kFloat32)),
        optimizer_(trainable(model), cfg.momentum),
        val_targets_(label_tensor(val.labels)) {}

  double train_epoch(int epoch, double lr) override {
    model_.train_mode();
    std::vector<std::size_t> order(train_.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng(derive_seed({cfg_.seed, static_cast<std::uint64_t>(epoch), kShuffleStream})).shuffle(order);

    double total = 0.0;
    const auto batch = static_cast<std::size_t>(cfg_.batch_size);
    for (std::size_t start = 0, b = 0; start < order.size(); start += batch, ++b) {
      const std::size_t end = std::min(order.size(), start + batch);
      std::vector<FloatImage> images;
      std::vector<ArtifactLabelVector> labels;
      for (std::size_t k = start; k < end; ++k) {
        const std::size_t idx = order[k];
        images.push_back(cfg_.augment
                             ? augmenter_.apply(train_.images[idx],
                                                {cfg_.seed, static_cast<std::uint64_t>(epoch), idx})
                             : train_.images[idx]);
        labels.push_back(train_.labels[idx]);
      }
      const auto logits = model_.forward_nchw(to_nchw_batch(images));
      const auto loss = weighted_bce(logits, label_tensor(labels), pos_weights_);
      const double value = loss.item<double>();
      if (!std::isfinite(value)) {
        throw TrainingAbort("non-finite training loss at epoch " + std::to_string(epoch) +
                            ", batch " + std::to_string(b));
      }
      optimizer_.zero_grad();
      loss.backward();
      try {
        optimizer_.step(lr);
      } catch (const NonFiniteGradient& e) {
        throw TrainingAbort("epoch " + std::to_string(epoch) + ", batch " + std::to_string(b) +
                            ": " + e.what());
      }
      total += value * static_cast<double>(end - start);
    }
    return total / static_cast<double>(order.size());
  }

  ValidationResult validate(int /*epoch*/) override {
    const auto logits = predict_logits(model_, val_.images, cfg_.batch_size);
    auto z = torch::empty({static_cast<long>(logits.size()), static_cast<long>(kNumArtifacts)},
                          torch::kFloat64);
    auto acc = z.accessor<double, 2>();
    std::vector<ArtifactLabelVector> preds;
    for (std::size_t i = 0; i < logits.size(); ++i) {
      for (std::size_t c = 0; c < kNumArtifacts; ++c) acc[i][c] = logits[i].values[c];
      preds.push_back(threshold_predictions(to_probabilities(logits[i])));
    }
    ValidationResult r;
    torch::NoGradGuard no_grad;
    r.loss = weighted_bce(z, val_targets_.to(torch::kFloat64), pos_weights_.to(torch::kFloat64))
                 .item<double>();
    r.per_class_accuracy = per_class_accuracy(preds, val_.labels);
    return r;
  }

  void capture_best(int /*epoch*/) override { best_ = model_.named_state(); }

  void restore_best() override {
    if (!best_.empty()) model_.load_named_state(best_);
    model_.eval_mode();
  }

 private:
  ArtifactClassifier& model_;
  const LabeledImages& train_;
  const LabeledImages& val_;
  const TrainConfig& cfg_;
  Augmenter augmenter_;
  torch::Tensor pos_weights_;
  SgdMomentum optimizer_;
  torch::Tensor val_targets_;
  std::vector<std::pair<std::string, torch::Tensor>> best_;
};

}  // namespace

FitOutcome fit(ArtifactClassifier& model, const LabeledImages& train, const LabeledImages& val,
               const TrainConfig& cfg, const EpochCallback& on_epoch) {
  cfg.validate();
  if (train.empty()) throw ArgumentError("fit: training split is empty");
  if (val.empty()) throw ArgumentError("fit: validation split is empty");

  FitOutcome outcome;
  outcome.pos_weights = cfg.pos_weights ? *cfg.pos_weights : class_pos_weights(train.labels);
  NetworkRunner runner(model, train, val, cfg, outcome.pos_weights);
  outcome.loop = run_epochs(runner, cfg, on_epoch);

  auto& meta = outcome.metadata;
  meta.created_at = utc_now_iso8601();
  meta.train_config_digest = cfg.digest();
  meta.epoch_stopped = outcome.loop.history.empty() ? -1 : outcome.loop.history.back().epoch;
  meta.best_epoch = outcome.loop.best_epoch;
  meta.best_val_loss = outcome.loop.best_val_loss;
  meta.validation_source = "validation split (" + std::to_string(val.size()) + " images)";
  return outcome;
}

std::size_t final_holdout_size(std::size_t n, double frac) {
  const auto h = static_cast<std::size_t>(std::floor(frac * static_cast<double>(n) + 0.5));
  return std::clamp<std::size_t>(h, 1, n > 1 ? n - 1 : 1);
}

FitOutcome fit_final(ArtifactClassifier& model, const LabeledImages& all_non_test,
                     const TrainConfig& cfg, const EpochCallback& on_epoch) {
  cfg.validate();
  const std::size_t n = all_non_test.size();
  if (n < 2) throw ArgumentError("fit_final: need at least 2 records");
  const std::size_t holdout = final_holdout_size(n, cfg.final_holdout_frac);
  const std::array<std::size_t, 2> caps = {n - holdout, holdout};
  const auto group =
      stratified_assign(all_non_test.labels, caps, derive_seed({cfg.seed, kHoldoutStream}));
  std::vector<std::size_t> fit_idx;
  std::vector<std::size_t> hold_idx;
  for (std::size_t i = 0; i < n; ++i) (group[i] == 0 ? fit_idx : hold_idx).push_back(i);

  log::info(log::printf("fit_final: early stopping driven by an internal stratified holdout of "
                        "%zu of %zu records",
                        hold_idx.size(), n));
  auto outcome = fit(model, all_non_test.subset(fit_idx), all_non_test.subset(hold_idx), cfg,
                     on_epoch);
  outcome.metadata.validation_source = "internal stratified holdout of " +
                                       std::to_string(hold_idx.size()) + " of " +
                                       std::to_string(n) + " non-test records";
  return outcome;
}

CvResult cross_validate_classifier(const ClassifierConfig& model_cfg,
                                   const LabeledImages& train_plus_val,
                                   const LabeledImages& eval_set, const TrainConfig& cfg,
                                   std::size_t k, double threshold, const FoldCallback& on_fold) {
  if (eval_set.empty()) throw ArgumentError("cross_validate: evaluation set is empty");
  return cross_validate(
      train_plus_val.labels, k, cfg.seed,
      [&](std::size_t fold, std::span<const std::size_t> fit_idx,
          std::span<const std::size_t> holdout_idx) {
        auto model = build_classifier(model_cfg);
        TrainConfig fold_cfg = cfg;
        fold_cfg.seed = derive_seed({cfg.seed, fold});
        const auto outcome = fit(*model, train_plus_val.subset(fit_idx),
                                 train_plus_val.subset(holdout_idx), fold_cfg);
        if (on_fold) on_fold(fold, outcome);
        std::vector<ArtifactLabelVector> preds;
        for (const auto& z : predict_logits(*model, eval_set.images, cfg.batch_size)) {
          preds.push_back(threshold_predictions(to_probabilities(z), threshold));
        }
        return per_class_accuracy(preds, eval_set.labels);
      });
}

}  // namespace uwfqa::nn
