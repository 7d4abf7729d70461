#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "lexfly/params.hpp"

namespace lexfly {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double clip_norm = 5.0;  // 0 disables clipping
};

// Adam with bias correction over a ParamStore; moments keyed by parameter
// order. Aborts on non-finite gradients, naming the parameter.
class Adam {
 public:
  Adam(AdamConfig cfg, const ParamStore& store) : cfg_(cfg) {
    for (const auto& [name, node] : store.items()) {
      m_.push_back(Tensor::zeros(node->value.shape()));
      v_.push_back(Tensor::zeros(node->value.shape()));
    }
  }

  const AdamConfig& config() const { return cfg_; }
  long long steps() const { return t_; }

  // Scales all grads to a global norm of at most clip_norm; returns the
  // pre-clip norm.
  static double clip_gradients(ParamStore& store, double clip_norm) {
    double sq = 0.0;
    for (const auto& [name, node] : store.items())
      for (double g : node->grad.data()) sq += g * g;
    const double norm = std::sqrt(sq);
    if (clip_norm > 0.0 && norm > clip_norm) {
      const double s = clip_norm / norm;
      for (auto& [name, node] : store.items())
        for (auto& g : node->grad.data()) g *= s;
    }
    return norm;
  }

  void step(ParamStore& store) {
    const auto& items = store.items();
    if (items.size() != m_.size())
      throw ContractError("Adam: parameter count changed under the optimizer");
    ++t_;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    for (std::size_t k = 0; k < items.size(); ++k) {
      Node& p = *items[k].second;
      if (!p.grad.all_finite())
        throw ContractError("Adam: non-finite gradient in " + items[k].first +
                            " at step " + std::to_string(t_));
      for (std::size_t i = 0; i < p.value.size(); ++i) {
        const double g = p.grad[i];
        m_[k][i] = cfg_.beta1 * m_[k][i] + (1.0 - cfg_.beta1) * g;
        v_[k][i] = cfg_.beta2 * v_[k][i] + (1.0 - cfg_.beta2) * g * g;
        const double mhat = m_[k][i] / bc1;
        const double vhat = v_[k][i] / bc2;
        p.value[i] -= cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps);
      }
    }
  }

  // Moment tensors for train-state serialization.
  std::vector<Tensor>& first_moments() { return m_; }
  std::vector<Tensor>& second_moments() { return v_; }
  void set_steps(long long t) { t_ = t; }

 private:
  AdamConfig cfg_;
  long long t_ = 0;
  std::vector<Tensor> m_;
  std::vector<Tensor> v_;
};

}  // namespace lexfly
