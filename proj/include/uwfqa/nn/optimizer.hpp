#pragma once

#include <vector>

#include <torch/torch.h>

namespace uwfqa::nn {

/// Heavy-ball update: v <- momentum * v + g; param <- param - lr * v.
/// Operates in place on detached tensors.
void sgd_momentum_step(torch::Tensor& param, const torch::Tensor& grad, torch::Tensor& velocity,
                       double lr, double momentum);

/// Thrown when a gradient contains NaN or Inf; carries max |g| over finite
/// entries for diagnostics.
class NonFiniteGradient : public std::runtime_error {
 public:
  NonFiniteGradient(const std::string& param, double max_abs_grad);
  const std::string& parameter() const { return param_; }
  double max_abs_grad() const { return max_abs_; }

 private:
  std::string param_;
  double max_abs_;
};

/// SGD with momentum over a fixed parameter list, velocity starting at zero.
class SgdMomentum {
 public:
  SgdMomentum(std::vector<std::pair<std::string, torch::Tensor>> params, double momentum);

  void zero_grad();
  /// Checks every gradient first; throws NonFiniteGradient without touching
  /// any parameter if one is not finite.
  void step(double lr);
  /// Largest |g| over all gradients, for logging.
  double max_abs_grad() const;

 private:
  std::vector<std::pair<std::string, torch::Tensor>> params_;
  std::vector<torch::Tensor> velocity_;
  double momentum_;
};

}  // namespace uwfqa::nn
