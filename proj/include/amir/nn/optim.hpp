#pragma once
#include <cmath>
#include <cstdint>
#include <vector>

#include "amir/nn/params.hpp"

namespace amir::nn {

// Cosine annealing from lr0 down to lr_min over `total` epochs.
inline double cosine_lr(double lr0, double lr_min, int epoch, int total) {
  if (total <= 1) return lr0;
  double t = static_cast<double>(epoch) / (total - 1);
  return lr_min + 0.5 * (lr0 - lr_min) * (1.0 + std::cos(M_PI * t));
}

// Adam with decoupled weight decay.
template <class T>
class AdamW {
 public:
  struct Slot {
    std::vector<T> m, v;
  };

  explicit AdamW(ParamStore<T>& store, double weight_decay = 0.0,
                 double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
      : weight_decay_(weight_decay), beta1_(beta1), beta2_(beta2), eps_(eps) {
    for (auto& [name, p] : store.all()) {
      params_.push_back(p);
      slots_.push_back({std::vector<T>(p.numel(), T(0)),
                        std::vector<T>(p.numel(), T(0))});
    }
  }

  void step(double lr) {
    ++t_;
    const double bc1 = 1.0 - std::pow(beta1_, t_);
    const double bc2 = 1.0 - std::pow(beta2_, t_);
    for (size_t k = 0; k < params_.size(); ++k) {
      auto& p = params_[k];
      if (p.n->grad.size() != p.numel()) continue;  // no gradient this step
      auto& s = slots_[k];
      for (size_t i = 0; i < p.numel(); ++i) {
        double g = p.n->grad[i];
        s.m[i] = static_cast<T>(beta1_ * s.m[i] + (1.0 - beta1_) * g);
        s.v[i] = static_cast<T>(beta2_ * s.v[i] + (1.0 - beta2_) * g * g);
        double mh = s.m[i] / bc1;
        double vh = s.v[i] / bc2;
        double w = p.n->value.v[i];
        w -= lr * (mh / (std::sqrt(vh) + eps_) + weight_decay_ * w);
        p.n->value.v[i] = static_cast<T>(w);
      }
    }
  }

  std::int64_t steps() const { return t_; }
  std::vector<Slot>& slots() { return slots_; }
  void set_steps(std::int64_t t) { t_ = t; }

 private:
  std::vector<Var<T>> params_;
  std::vector<Slot> slots_;
  std::int64_t t_ = 0;
  double weight_decay_, beta1_, beta2_, eps_;
};

}  // namespace amir::nn
