#include "uwfqa/nn/loss.hpp"

#include "uwfqa/errors.hpp"

namespace uwfqa::nn {

torch::Tensor weighted_bce(const torch::Tensor& logits, const torch::Tensor& targets,
                           const torch::Tensor& pos_weights) {
  if (logits.dim() != 2 || logits.sizes() != targets.sizes() || pos_weights.dim() != 1 ||
      pos_weights.size(0) != logits.size(1)) {
    throw ArgumentError("weighted_bce: expected B x C logits/targets and C weights");
  }
  if (!((targets == 0) | (targets == 1)).all().item<bool>()) {
    throw ArgumentError("weighted_bce: targets must be 0 or 1");
  }
  const auto w = pos_weights.to(logits.dtype()).unsqueeze(0);
  const auto y = targets.to(logits.dtype());
  // softplus(-z) = relu(-z) + log1p(exp(-|z|))
  const auto softplus_neg = torch::relu(-logits) + torch::log1p(torch::exp(-logits.abs()));
  return ((1 - y) * logits + (1 + (w - 1) * y) * softplus_neg).mean();
}

}  // namespace uwfqa::nn
