#pragma once

#include <torch/torch.h>

namespace uwfqa::nn {

/// Tensor form of uwfqa::weighted_bce: logits and targets B x C, weights C.
/// Mean over all elements. Throws ArgumentError for targets outside {0, 1}.
torch::Tensor weighted_bce(const torch::Tensor& logits, const torch::Tensor& targets,
                           const torch::Tensor& pos_weights);

}  // namespace uwfqa::nn
