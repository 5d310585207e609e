#pragma once

#include <cmath>
#include <cstddef>
#include <utility>
#include <vector>

#include "mmf/autodiff.hpp"
#include "mmf/errors.hpp"
#include "mmf/tensor.hpp"

namespace mmf {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Adam with bias correction:
///   m ← β1·m + (1−β1)·g,  v ← β2·v + (1−β2)·g²
///   p ← p − α·m̂/(√v̂ + ε)  with m̂ = m/(1−β1ᵗ), v̂ = v/(1−β2ᵗ).
class Adam {
 public:
  explicit Adam(std::vector<Parameter*> params, AdamConfig cfg = {})
      : cfg_(cfg), params_(std::move(params)) {
    for (Parameter* p : params_) {
      m_.emplace_back(p->value.shape());
      v_.emplace_back(p->value.shape());
    }
  }

  void step() {
    ++t_;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    for (std::size_t pi = 0; pi < params_.size(); ++pi) {
      Parameter& p = *params_[pi];
      Tensor& m = m_[pi];
      Tensor& v = v_[pi];
      for (std::size_t i = 0; i < p.value.size(); ++i) {
        const double g = p.grad[i];
        if (!std::isfinite(g))
          throw NumericError("adam: non-finite gradient for parameter '" + p.name +
                             "' entry " + std::to_string(i));
        m[i] = cfg_.beta1 * m[i] + (1.0 - cfg_.beta1) * g;
        v[i] = cfg_.beta2 * v[i] + (1.0 - cfg_.beta2) * g * g;
        const double mhat = m[i] / bc1;
        const double vhat = v[i] / bc2;
        p.value[i] -= cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps);
      }
    }
  }

  void zero_grads() {
    for (Parameter* p : params_) p->zero_grad();
  }

  long step_count() const { return t_; }
  const AdamConfig& config() const { return cfg_; }
  const Tensor& first_moment(std::size_t pi) const { return m_[pi]; }
  const Tensor& second_moment(std::size_t pi) const { return v_[pi]; }

 private:
  AdamConfig cfg_;
  std::vector<Parameter*> params_;
  std::vector<Tensor> m_, v_;
  long t_ = 0;
};

}  // namespace mmf
