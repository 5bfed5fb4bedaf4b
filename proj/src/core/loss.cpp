#include "uwfqa/loss.hpp"

#include <cmath>

#include "uwfqa/errors.hpp"
#include "uwfqa/scores.hpp"

namespace uwfqa {
namespace {

void check_shapes(std::span<const double> logits, std::span<const double> targets,
                  std::span<const double> weights) {
  if (weights.empty()) throw ArgumentError("weights must not be empty");
  if (logits.size() != targets.size()) throw ArgumentError("logits/targets size mismatch");
  if (logits.empty() || logits.size() % weights.size() != 0) {
    throw ArgumentError("logits size must be a positive multiple of the class count");
  }
  for (double y : targets) {
    if (y != 0.0 && y != 1.0) throw ArgumentError("targets must be 0 or 1");
  }
}

}  // namespace

double softplus(double x) {
  // log(1 + e^x) without overflow.
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

double weighted_bce(std::span<const double> logits, std::span<const double> targets,
                    std::span<const double> weights) {
  check_shapes(logits, targets, weights);
  const std::size_t classes = weights.size();
  double total = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    const double z = logits[i];
    const double y = targets[i];
    const double w = weights[i % classes];
    total += (1.0 - y) * z + (1.0 + (w - 1.0) * y) * softplus(-z);
  }
  return total / static_cast<double>(logits.size());
}

std::vector<double> weighted_bce_grad(std::span<const double> logits,
                                      std::span<const double> targets,
                                      std::span<const double> weights) {
  check_shapes(logits, targets, weights);
  const std::size_t classes = weights.size();
  const double inv_n = 1.0 / static_cast<double>(logits.size());
  std::vector<double> grad(logits.size());
  for (std::size_t i = 0; i < logits.size(); ++i) {
    const double s = logistic(logits[i]);
    const double y = targets[i];
    const double w = weights[i % classes];
    grad[i] = ((1.0 - y) * s - w * y * (1.0 - s)) * inv_n;
  }
  return grad;
}

}  // namespace uwfqa
