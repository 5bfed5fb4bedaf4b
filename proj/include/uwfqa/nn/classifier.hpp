#pragma once

#include <memory>
#include <span>
#include <string>
#include <vector>

#include <torch/torch.h>

#include "uwfqa/classifier_config.hpp"
#include "uwfqa/raster.hpp"
#include "uwfqa/scores.hpp"

namespace uwfqa::nn {

/// Bottleneck residual block: 1x1 reduce, 3x3 (carrying the stride), 1x1
/// expand by 4, identity or projected shortcut.
class BottleneckImpl : public torch::nn::Module {
 public:
  static constexpr int kExpansion = 4;

  BottleneckImpl(int in_channels, int width, int stride);
  torch::Tensor forward(const torch::Tensor& x);

 private:
  torch::nn::Conv2d conv1_{nullptr}, conv2_{nullptr}, conv3_{nullptr};
  torch::nn::BatchNorm2d bn1_{nullptr}, bn2_{nullptr}, bn3_{nullptr};
  torch::nn::Sequential downsample_{nullptr};
};
TORCH_MODULE(Bottleneck);

/// 50-layer residual network (stages of 3, 4, 6, 3 bottlenecks). Parameter
/// names follow torchvision's resnet50 so its state dicts load directly.
class ResNet50Impl : public torch::nn::Module {
 public:
  explicit ResNet50Impl(int num_outputs);
  torch::Tensor forward(torch::Tensor x);

  torch::nn::Linear& head() { return fc_; }

 private:
  torch::nn::Sequential make_stage(int& in_channels, int width, int blocks, int stride);

  torch::nn::Conv2d conv1_{nullptr};
  torch::nn::BatchNorm2d bn1_{nullptr};
  torch::nn::Sequential layer1_{nullptr}, layer2_{nullptr}, layer3_{nullptr}, layer4_{nullptr};
  torch::nn::Linear fc_{nullptr};
};
TORCH_MODULE(ResNet50);

/// True for parameters/buffers that belong to the replaced output head.
bool is_head_parameter(const std::string& name);

/// Six-output multi-label classifier on a ResNet-50 backbone.
class ArtifactClassifier {
 public:
  /// Builds the network, initializes it from `cfg.init_seed` and, when
  /// cfg.pretrained_init, loads backbone weights (InitializationError if they
  /// cannot be read; there is no fallback to random init).
  explicit ArtifactClassifier(ClassifierConfig cfg);

  const ClassifierConfig& config() const { return cfg_; }
  ResNet50& network() { return net_; }
  const ResNet50& network() const { return net_; }

  /// Logits for an N x 3 x H x W tensor in the network's current mode.
  torch::Tensor forward_nchw(const torch::Tensor& x);

  void train_mode() { net_->train(); }
  void eval_mode() { net_->eval(); }

  /// SHA-256 over parameters and buffers, restricted to the head or the
  /// backbone, or over everything.
  enum class Part { kAll, kBackbone, kHead };
  std::string parameter_digest(Part part = Part::kAll) const;

  /// Copies of every parameter and buffer keyed by name.
  std::vector<std::pair<std::string, torch::Tensor>> named_state() const;
  void load_named_state(const std::vector<std::pair<std::string, torch::Tensor>>& state);

 private:
  ClassifierConfig cfg_;
  ResNet50 net_{nullptr};
};

std::shared_ptr<ArtifactClassifier> build_classifier(const ClassifierConfig& cfg);

/// Loads backbone tensors from a torchvision-style state dict file. Head
/// entries (fc.*) in the file are ignored. Throws InitializationError.
void load_pretrained_backbone(ArtifactClassifier& model, const std::filesystem::path& path);

/// Stacks HWC float images into an N x 3 x H x W tensor.
torch::Tensor to_nchw_batch(std::span<const FloatImage> images);

/// Eval-mode forward of an N x H x W x 3 batch in [-1, 1]. Throws ShapeError
/// unless H = W = input_side.
std::vector<LogitVector> forward(ArtifactClassifier& model, const torch::Tensor& batch_nhwc);

/// Eval-mode logits for images, processed in chunks of `batch_size`.
std::vector<LogitVector> predict_logits(ArtifactClassifier& model,
                                        std::span<const FloatImage> images,
                                        int batch_size = 16);

}  // namespace uwfqa::nn
