#include "cogat/adam.hpp"

#include <cmath>

#include "cogat/errors.hpp"

namespace cogat {

Adam::Adam(std::vector<Tensor> params, AdamOptions options) : params_(std::move(params)), options_(options) {
  if (!(options_.learning_rate > 0) || !(options_.beta1 > 0) || !(options_.beta2 > 0) || !(options_.epsilon > 0)) {
    throw ContractError("Adam hyperparameters must be positive");
  }
  for (const auto& p : params_) {
    m_.emplace_back(p.size(), 0.0);
    v_.emplace_back(p.size(), 0.0);
  }
}

void Adam::step() {
  for (const auto& p : params_) {
    if (!p.has_grad()) throw ContractError("Adam::step: parameter of shape " + shape_string(p.shape()) + " has no gradient");
  }
  ++step_count_;
  const double t = static_cast<double>(step_count_);
  const double c1 = 1.0 - std::pow(options_.beta1, t);
  const double c2 = 1.0 - std::pow(options_.beta2, t);
  const double b1 = options_.beta1, b2 = options_.beta2;
  // lr·m̂/(√v̂+ε) with the bias corrections folded into two constants.
  const double step_size = options_.learning_rate / c1;
  const double inv_sqrt_c2 = 1.0 / std::sqrt(c2);
  const double eps = options_.epsilon;
  for (std::size_t k = 0; k < params_.size(); ++k) {
    auto& p = params_[k];
    double* values = p.mutable_values().data();
    double* grad = p.mutable_grad().data();
    double* m = m_[k].data();
    double* v = v_[k].data();
    const std::size_t n = m_[k].size();
    for (std::size_t i = 0; i < n; ++i) {
      const double g = grad[i];
      m[i] = b1 * m[i] + (1.0 - b1) * g;
      v[i] = b2 * v[i] + (1.0 - b2) * g * g;
      values[i] -= step_size * m[i] / (std::sqrt(v[i]) * inv_sqrt_c2 + eps);
      grad[i] = 0.0;
    }
  }
}

double clip_grad_norm(std::vector<Tensor>& params, double max_norm) {
  double sq = 0.0;
  for (const auto& p : params) {
    if (!p.has_grad()) continue;
    for (double g : p.grad()) sq += g * g;
  }
  const double norm = std::sqrt(sq);
  if (norm > max_norm) {
    const double f = max_norm / norm;
    for (auto& p : params) {
      if (!p.has_grad()) continue;
      for (double& g : p.mutable_grad()) g *= f;
    }
  }
  return norm;
}

}  // namespace cogat
