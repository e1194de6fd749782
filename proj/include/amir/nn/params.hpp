#pragma once
#include <map>
#include <random>
#include <string>

#include "amir/nn/autodiff.hpp"
#include "amir/rng.hpp"

namespace amir::nn {

// Named parameter collection. Initialization seeds are derived from the
// store seed and a creation counter, so construction order is part of the
// reproducibility contract.
template <class T>
class ParamStore {
 public:
  explicit ParamStore(std::uint64_t seed = 0) : seed_(seed) {}

  // fan-in scaled uniform: U(-1/sqrt(fan_in), 1/sqrt(fan_in))
  Var<T>& add_uniform(const std::string& name, std::vector<int> shape,
                      int fan_in) {
    NdArray<T> a(shape);
    auto rng = make_rng(split_seed(seed_, counter_++));
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    std::uniform_real_distribution<double> u(-bound, bound);
    for (auto& x : a.v) x = static_cast<T>(u(rng));
    return insert(name, std::move(a));
  }

  Var<T>& add_constant(const std::string& name, std::vector<int> shape, T val) {
    ++counter_;  // keep seed stream aligned whether or not the init draws
    return insert(name, NdArray<T>(std::move(shape), val));
  }

  Var<T>& add_conv(const std::string& name, int oc, int c, int k) {
    add_uniform(name + ".w", {oc, c, k, k}, c * k * k);
    return add_constant(name + ".b", {oc}, T(0));
  }
  Var<T>& add_linear(const std::string& name, int out, int in) {
    add_uniform(name + ".w", {out, in}, in);
    return add_constant(name + ".b", {out}, T(0));
  }

  Var<T>& get(const std::string& name) {
    auto it = params_.find(name);
    if (it == params_.end()) throw std::out_of_range("no parameter: " + name);
    return it->second;
  }
  const Var<T>& get(const std::string& name) const {
    auto it = params_.find(name);
    if (it == params_.end()) throw std::out_of_range("no parameter: " + name);
    return it->second;
  }
  bool has(const std::string& name) const { return params_.count(name) > 0; }

  // name-ordered view; the optimizer reaches every parameter exactly once
  std::map<std::string, Var<T>>& all() { return params_; }
  const std::map<std::string, Var<T>>& all() const { return params_; }

  void zero_grad() {
    for (auto& [name, p] : params_) p.n->grad.assign(p.numel(), T(0));
  }
  void set_requires_grad(bool rg) {
    for (auto& [name, p] : params_) p.n->requires_grad = rg;
  }

  std::uint64_t seed() const { return seed_; }

 private:
  Var<T>& insert(const std::string& name, NdArray<T> a) {
    auto [it, ok] = params_.emplace(name, Var<T>::leaf(std::move(a), true));
    if (!ok) throw std::invalid_argument("duplicate parameter name: " + name);
    return it->second;
  }

  std::uint64_t seed_;
  std::uint64_t counter_ = 0;
  std::map<std::string, Var<T>> params_;
};

}  // namespace amir::nn
