#include "uwfqa/nn/optimizer.hpp"

#include <sstream>

namespace uwfqa::nn {

void sgd_momentum_step(torch::Tensor& param, const torch::Tensor& grad, torch::Tensor& velocity,
                       double lr, double momentum) {
  torch::NoGradGuard no_grad;
  velocity.mul_(momentum).add_(grad);
  param.sub_(velocity * lr);
}

namespace {
std::string describe(const std::string& param, double max_abs) {
  std::ostringstream os;
  os << "non-finite gradient in '" << param << "' (max |g| over finite entries " << max_abs << ")";
  return os.str();
}

double finite_max_abs(const torch::Tensor& g) {
  const auto finite = g.masked_select(torch::isfinite(g));
  return finite.numel() == 0 ? 0.0 : finite.abs().max().item<double>();
}
}  // namespace

NonFiniteGradient::NonFiniteGradient(const std::string& param, double max_abs_grad)
    : std::runtime_error(describe(param, max_abs_grad)), param_(param), max_abs_(max_abs_grad) {}

SgdMomentum::SgdMomentum(std::vector<std::pair<std::string, torch::Tensor>> params, double momentum)
    : params_(std::move(params)), momentum_(momentum) {
  velocity_.reserve(params_.size());
  for (const auto& [_, p] : params_) velocity_.push_back(torch::zeros_like(p));
}

void SgdMomentum::zero_grad() {
  for (auto& [_, p] : params_) {
    if (p.grad().defined()) p.mutable_grad().zero_();
  }
}

double SgdMomentum::max_abs_grad() const {
  double m = 0.0;
  for (const auto& [_, p] : params_) {
    if (p.grad().defined()) m = std::max(m, finite_max_abs(p.grad()));
  }
  return m;
}

void SgdMomentum::step(double lr) {
  for (const auto& [name, p] : params_) {
    const auto& g = p.grad();
    if (g.defined() && !torch::isfinite(g).all().item<bool>()) {
      throw NonFiniteGradient(name, max_abs_grad());
    }
  }
  for (std::size_t i = 0; i < params_.size(); ++i) {
    auto& p = params_[i].second;
    if (!p.grad().defined()) continue;
    auto data = p.detach();
    sgd_momentum_step(data, p.grad(), velocity_[i], lr, momentum_);
  }
}

}  // namespace uwfqa::nn
