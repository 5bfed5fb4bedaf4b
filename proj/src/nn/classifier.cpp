#include "uwfqa/nn/classifier.hpp"

#include <ATen/CPUGeneratorImpl.h>

#include <cmath>
#include <fstream>
#include <unordered_map>

#include "uwfqa/digest.hpp"
#include "uwfqa/errors.hpp"

namespace uwfqa::nn {
namespace {

torch::nn::Conv2d conv(int in, int out, int kernel, int stride, int padding) {
  return torch::nn::Conv2d(
      torch::nn::Conv2dOptions(in, out, kernel).stride(stride).padding(padding).bias(false));
}

}  // namespace

BottleneckImpl::BottleneckImpl(int in_channels, int width, int stride) {
  const int out_channels = width * kExpansion;
  conv1_ = register_module("conv1", conv(in_channels, width, 1, 1, 0));
  bn1_ = register_module("bn1", torch::nn::BatchNorm2d(width));
  conv2_ = register_module("conv2", conv(width, width, 3, stride, 1));
  bn2_ = register_module("bn2", torch::nn::BatchNorm2d(width));
  conv3_ = register_module("conv3", conv(width, out_channels, 1, 1, 0));
  bn3_ = register_module("bn3", torch::nn::BatchNorm2d(out_channels));
  if (stride != 1 || in_channels != out_channels) {
    downsample_ = register_module(
        "downsample", torch::nn::Sequential(conv(in_channels, out_channels, 1, stride, 0),
                                            torch::nn::BatchNorm2d(out_channels)));
  }
}

torch::Tensor BottleneckImpl::forward(const torch::Tensor& x) {
  auto out = torch::relu(bn1_(conv1_(x)));
  out = torch::relu(bn2_(conv2_(out)));
  out = bn3_(conv3_(out));
  const auto identity = downsample_ ? downsample_->forward(x) : x;
  return torch::relu(out + identity);
}

ResNet50Impl::ResNet50Impl(int num_outputs) {
  conv1_ = register_module("conv1", conv(3, 64, 7, 2, 3));
  bn1_ = register_module("bn1", torch::nn::BatchNorm2d(64));
  int channels = 64;
  layer1_ = register_module("layer1", make_stage(channels, 64, 3, 1));
  layer2_ = register_module("layer2", make_stage(channels, 128, 4, 2));
  layer3_ = register_module("layer3", make_stage(channels, 256, 6, 2));
  layer4_ = register_module("layer4", make_stage(channels, 512, 3, 2));
  fc_ = register_module("fc", torch::nn::Linear(channels, num_outputs));
}

torch::nn::Sequential ResNet50Impl::make_stage(int& in_channels, int width, int blocks,
                                               int stride) {
  torch::nn::Sequential stage;
  for (int b = 0; b < blocks; ++b) {
    stage->push_back(Bottleneck(in_channels, width, b == 0 ? stride : 1));
    in_channels = width * BottleneckImpl::kExpansion;
  }
  return stage;
}

torch::Tensor ResNet50Impl::forward(torch::Tensor x) {
  x = torch::relu(bn1_(conv1_(x)));
  x = torch::max_pool2d(x, 3, 2, 1);
  x = layer4_->forward(layer3_->forward(layer2_->forward(layer1_->forward(x))));
  x = torch::adaptive_avg_pool2d(x, {1, 1}).flatten(1);
  return fc_(x);
}

bool is_head_parameter(const std::string& name) { return name.rfind("fc.", 0) == 0; }

ArtifactClassifier::ArtifactClassifier(ClassifierConfig cfg) : cfg_(std::move(cfg)) {
  cfg_.validate();
  net_ = ResNet50(cfg_.num_outputs);

  // Deterministic init from a private generator: He-normal (fan-out) convs,
  // unit/zero batch norm, fan-in-scaled uniform head with zero bias.
  torch::NoGradGuard no_grad;
  auto gen = at::make_generator<at::CPUGeneratorImpl>(cfg_.init_seed);
  for (auto& item : net_->named_modules()) {
    auto& module = item.value();
    if (auto* c = module->as<torch::nn::Conv2d>()) {
      const auto& w = c->weight;
      const double fan_out = static_cast<double>(w.size(0) * w.size(2) * w.size(3));
      w.normal_(0.0, std::sqrt(2.0 / fan_out), gen);
    } else if (auto* bn = module->as<torch::nn::BatchNorm2d>()) {
      bn->weight.fill_(1.0);
      bn->bias.zero_();
    }
  }
  auto& head = net_->head();
  const double bound = 1.0 / std::sqrt(static_cast<double>(head->weight.size(1)));
  head->weight.uniform_(-bound, bound, gen);
  head->bias.zero_();

  if (cfg_.pretrained_init) {
    const auto path = cfg_.pretrained_weights.empty() ? default_pretrained_weights_path()
                                                      : cfg_.pretrained_weights;
    load_pretrained_backbone(*this, path);
  }
  net_->eval();
}

torch::Tensor ArtifactClassifier::forward_nchw(const torch::Tensor& x) { return net_->forward(x); }

std::vector<std::pair<std::string, torch::Tensor>> ArtifactClassifier::named_state() const {
  std::vector<std::pair<std::string, torch::Tensor>> out;
  for (const auto& p : net_->named_parameters()) out.emplace_back(p.key(), p.value().detach().clone());
  for (const auto& b : net_->named_buffers()) out.emplace_back(b.key(), b.value().detach().clone());
  return out;
}

void ArtifactClassifier::load_named_state(
    const std::vector<std::pair<std::string, torch::Tensor>>& state) {
  std::unordered_map<std::string, const torch::Tensor*> by_name;
  for (const auto& [name, t] : state) by_name[name] = &t;
  torch::NoGradGuard no_grad;
  const auto assign = [&](const std::string& name, torch::Tensor& dst) {
    auto it = by_name.find(name);
    if (it == by_name.end()) throw StateError("missing tensor '" + name + "' in saved state");
    dst.copy_(*it->second);
  };
  for (auto& p : net_->named_parameters()) assign(p.key(), p.value());
  for (auto& b : net_->named_buffers()) assign(b.key(), b.value());
}

std::string ArtifactClassifier::parameter_digest(Part part) const {
  Sha256 hasher;
  const auto include = [&](const std::string& name) {
    switch (part) {
      case Part::kAll:
        return true;
      case Part::kHead:
        return is_head_parameter(name);
      case Part::kBackbone:
        return !is_head_parameter(name);
    }
    return true;
  };
  const auto feed = [&](const std::string& name, const torch::Tensor& t) {
    if (!include(name)) return;
    hasher.update(name);
    const auto c = t.detach().contiguous();
    hasher.update(std::span(static_cast<const std::byte*>(c.data_ptr()), c.nbytes()));
  };
  for (const auto& p : net_->named_parameters()) feed(p.key(), p.value());
  for (const auto& b : net_->named_buffers()) feed(b.key(), b.value());
  return hasher.hex_digest();
}

std::shared_ptr<ArtifactClassifier> build_classifier(const ClassifierConfig& cfg) {
  return std::make_shared<ArtifactClassifier>(cfg);
}

void load_pretrained_backbone(ArtifactClassifier& model, const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw InitializationError("pretrained backbone weights not found at '" + path.string() +
                              "' (set model.pretrained_weights or UWFQA_PRETRAINED_WEIGHTS, or "
                              "disable pretrained_init)");
  }
  std::vector<char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  std::unordered_map<std::string, torch::Tensor> tensors;
  try {
    const auto value = torch::pickle_load(bytes);
    if (!value.isGenericDict()) throw InitializationError("not a state dict");
    for (const auto& entry : value.toGenericDict()) {
      if (entry.key().isString() && entry.value().isTensor()) {
        tensors.emplace(entry.key().toStringRef(), entry.value().toTensor());
      }
    }
  } catch (const InitializationError& e) {
    throw InitializationError("cannot read pretrained weights '" + path.string() + "': " + e.what());
  } catch (const std::exception& e) {
    throw InitializationError("cannot read pretrained weights '" + path.string() + "': " + e.what());
  }

  torch::NoGradGuard no_grad;
  const auto copy = [&](const std::string& name, torch::Tensor& dst, bool optional) {
    if (is_head_parameter(name)) return;
    auto it = tensors.find(name);
    if (it == tensors.end()) {
      if (optional) return;
      throw InitializationError("pretrained weights lack '" + name + "'");
    }
    if (it->second.sizes() != dst.sizes()) {
      throw InitializationError("pretrained tensor '" + name + "' has the wrong shape");
    }
    dst.copy_(it->second.to(dst.dtype()));
  };
  for (auto& p : model.network()->named_parameters()) copy(p.key(), p.value(), false);
  for (auto& b : model.network()->named_buffers()) {
    copy(b.key(), b.value(), b.key().ends_with("num_batches_tracked"));
  }
}

torch::Tensor to_nchw_batch(std::span<const FloatImage> images) {
  std::vector<torch::Tensor> items;
  items.reserve(images.size());
  for (const auto& img : images) {
    auto hwc = torch::from_blob(const_cast<float*>(img.data.data()),
                                {img.height, img.width, img.channels}, torch::kFloat32);
    items.push_back(hwc.permute({2, 0, 1}));
  }
  return torch::stack(items).contiguous();
}

namespace {

std::vector<LogitVector> to_logit_vectors(const torch::Tensor& logits) {
  const auto cpu = logits.detach().to(torch::kFloat64).contiguous();
  const auto* p = cpu.data_ptr<double>();
  std::vector<LogitVector> out(static_cast<std::size_t>(cpu.size(0)));
  for (std::size_t i = 0; i < out.size(); ++i) {
    for (std::size_t c = 0; c < kNumArtifacts; ++c) out[i].values[c] = p[i * kNumArtifacts + c];
  }
  return out;
}

class EvalScope {
 public:
  explicit EvalScope(ArtifactClassifier& m) : model_(m), was_training_(m.network()->is_training()) {
    if (was_training_) model_.eval_mode();
  }
  ~EvalScope() {
    if (was_training_) model_.train_mode();
  }

 private:
  ArtifactClassifier& model_;
  bool was_training_;
  torch::NoGradGuard no_grad_;
};

}  // namespace

std::vector<LogitVector> forward(ArtifactClassifier& model, const torch::Tensor& batch_nhwc) {
  const int side = model.config().input_side;
  if (batch_nhwc.dim() != 4 || batch_nhwc.size(0) < 1 || batch_nhwc.size(1) != side ||
      batch_nhwc.size(2) != side || batch_nhwc.size(3) != 3) {
    throw ShapeError("expected a B x " + std::to_string(side) + " x " + std::to_string(side) +
                     " x 3 batch, got " + c10::str(batch_nhwc.sizes()));
  }
  EvalScope scope(model);
  const auto x = batch_nhwc.to(torch::kFloat32).permute({0, 3, 1, 2}).contiguous();
  return to_logit_vectors(model.forward_nchw(x));
}

std::vector<LogitVector> predict_logits(ArtifactClassifier& model,
                                        std::span<const FloatImage> images, int batch_size) {
  const int side = model.config().input_side;
  for (const auto& img : images) {
    if (img.height != side || img.width != side || img.channels != 3) {
      throw ShapeError("expected " + std::to_string(side) + "x" + std::to_string(side) +
                       "x3 images");
    }
  }
  EvalScope scope(model);
  std::vector<LogitVector> out;
  out.reserve(images.size());
  for (std::size_t start = 0; start < images.size(); start += static_cast<std::size_t>(batch_size)) {
    const auto chunk = images.subspan(start, std::min<std::size_t>(batch_size, images.size() - start));
    const auto logits = to_logit_vectors(model.forward_nchw(to_nchw_batch(chunk)));
    out.insert(out.end(), logits.begin(), logits.end());
  }
  return out;
}

}  // namespace uwfqa::nn
