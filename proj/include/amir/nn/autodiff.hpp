#pragma once
#include <cmath>
#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <vector>

#include "amir/nn/tensor.hpp"

namespace amir::nn {

// Reverse-mode tape. Nodes own their value and (after backward()) their
// gradient; gradients accumulate additively across uses of a node.
template <class T>
struct Node {
  NdArray<T> value;
  AlignedVec<T> grad;
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backward_fn;

  void ensure_grad() {
    if (grad.size() != value.numel()) grad.assign(value.numel(), T(0));
  }
};

template <class T>
class Var {
 public:
  std::shared_ptr<Node<T>> n;

  Var() = default;
  explicit Var(std::shared_ptr<Node<T>> node) : n(std::move(node)) {}

  // leaf constructors
  static Var leaf(NdArray<T> value, bool requires_grad) {
    auto node = std::make_shared<Node<T>>();
    node->value = std::move(value);
    node->requires_grad = requires_grad;
    return Var(std::move(node));
  }
  static Var constant(NdArray<T> value) { return leaf(std::move(value), false); }

  const NdArray<T>& value() const { return n->value; }
  NdArray<T>& value() { return n->value; }
  const std::vector<int>& shape() const { return n->value.shape; }
  size_t numel() const { return n->value.numel(); }
  const AlignedVec<T>& grad() const { return n->grad; }
  bool requires_grad() const { return n->requires_grad; }

  T scalar() const {
    if (numel() != 1) throw std::logic_error("scalar() on non-scalar");
    return n->value.v[0];
  }
};

namespace detail {

template <class T>
Var<T> make_op(NdArray<T> value, std::vector<Var<T>> parents,
               std::function<void(Node<T>&)> backward) {
  auto node = std::make_shared<Node<T>>();
  node->value = std::move(value);
  for (auto& p : parents) {
    node->requires_grad = node->requires_grad || p.n->requires_grad;
    node->parents.push_back(p.n);
  }
  if (node->requires_grad) node->backward_fn = std::move(backward);
  return Var<T>(std::move(node));
}

}  // namespace detail

// Runs reverse-mode accumulation from a scalar root.
template <class T>
void backward(const Var<T>& root) {
  if (root.numel() != 1) throw std::logic_error("backward() root must be scalar");
  // topological order by iterative DFS
  std::vector<Node<T>*> order;
  std::unordered_set<Node<T>*> seen;
  struct Frame {
    Node<T>* node;
    size_t next = 0;
  };
  std::vector<Frame> stack{{root.n.get()}};
  seen.insert(root.n.get());
  while (!stack.empty()) {
    Frame& f = stack.back();
    if (f.next < f.node->parents.size()) {
      Node<T>* p = f.node->parents[f.next++].get();
      if (p->requires_grad && seen.insert(p).second) stack.push_back({p});
    } else {
      order.push_back(f.node);
      stack.pop_back();
    }
  }
  for (Node<T>* node : order) node->grad.assign(node->value.numel(), T(0));
  root.n->grad[0] = T(1);
  for (auto it = order.rbegin(); it != order.rend(); ++it)
    if ((*it)->backward_fn) (*it)->backward_fn(**it);
}

// ---------------------------------------------------------------------------
// elementwise ops

template <class T>
Var<T> add(const Var<T>& a, const Var<T>& b) {
  if (!same_shape(a.shape(), b.shape())) throw std::invalid_argument("add: shape mismatch");
  NdArray<T> out(a.shape());
  for (size_t i = 0; i < out.numel(); ++i) out.v[i] = a.value().v[i] + b.value().v[i];
  return detail::make_op<T>(std::move(out), {a, b}, [](Node<T>& self) {
    for (int k = 0; k < 2; ++k) {
      auto& p = *self.parents[static_cast<size_t>(k)];
      if (!p.requires_grad) continue;
      p.ensure_grad();
      for (size_t i = 0; i < self.grad.size(); ++i) p.grad[i] += self.grad[i];
    }
  });
}

template <class T>
Var<T> sub(const Var<T>& a, const Var<T>& b) {
  if (!same_shape(a.shape(), b.shape())) throw std::invalid_argument("sub: shape mismatch");
  NdArray<T> out(a.shape());
  for (size_t i = 0; i < out.numel(); ++i) out.v[i] = a.value().v[i] - b.value().v[i];
  return detail::make_op<T>(std::move(out), {a, b}, [](Node<T>& self) {
    auto& pa = *self.parents[0];
    auto& pb = *self.parents[1];
    if (pa.requires_grad) {
      pa.ensure_grad();
      for (size_t i = 0; i < self.grad.size(); ++i) pa.grad[i] += self.grad[i];
    }
    if (pb.requires_grad) {
      pb.ensure_grad();
      for (size_t i = 0; i < self.grad.size(); ++i) pb.grad[i] -= self.grad[i];
    }
  });
}

template <class T>
Var<T> mul(const Var<T>& a, const Var<T>& b) {
  if (!same_shape(a.shape(), b.shape())) throw std::invalid_argument("mul: shape mismatch");
  NdArray<T> out(a.shape());
  for (size_t i = 0; i < out.numel(); ++i) out.v[i] = a.value().v[i] * b.value().v[i];
  return detail::make_op<T>(std::move(out), {a, b}, [](Node<T>& self) {
    auto& pa = *self.parents[0];
    auto& pb = *self.parents[1];
    if (pa.requires_grad) {
      pa.ensure_grad();
      for (size_t i = 0; i < self.grad.size(); ++i)
        pa.grad[i] += self.grad[i] * pb.value.v[i];
    }
    if (pb.requires_grad) {
      pb.ensure_grad();
      for (size_t i = 0; i < self.grad.size(); ++i)
        pb.grad[i] += self.grad[i] * pa.value.v[i];
    }
  });
}

template <class T>
Var<T> div(const Var<T>& a, const Var<T>& b) {
  if (!same_shape(a.shape(), b.shape())) throw std::invalid_argument("div: shape mismatch");
  NdArray<T> out(a.shape());
  for (size_t i = 0; i < out.numel(); ++i) out.v[i] = a.value().v[i] / b.value().v[i];
  return detail::make_op<T>(std::move(out), {a, b}, [](Node<T>& self) {
    auto& pa = *self.parents[0];
    auto& pb = *self.parents[1];
    if (pa.requires_grad) {
      pa.ensure_grad();
      for (size_t i = 0; i < self.grad.size(); ++i)
        pa.grad[i] += self.grad[i] / pb.value.v[i];
    }
    if (pb.requires_grad) {
      pb.ensure_grad();
      for (size_t i = 0; i < self.grad.size(); ++i)
        pb.grad[i] -= self.grad[i] * self.value.v[i] / pb.value.v[i];
    }
  });
}

template <class T>
Var<T> add_scalar(const Var<T>& a, T c) {
  NdArray<T> out(a.shape());
  for (size_t i = 0; i < out.numel(); ++i) out.v[i] = a.value().v[i] + c;
  return detail::make_op<T>(std::move(out), {a}, [](Node<T>& self) {
    auto& p = *self.parents[0];
    p.ensure_grad();
    for (size_t i = 0; i < self.grad.size(); ++i) p.grad[i] += self.grad[i];
  });
}

template <class T>
Var<T> mul_scalar(const Var<T>& a, T c) {
  NdArray<T> out(a.shape());
  for (size_t i = 0; i < out.numel(); ++i) out.v[i] = a.value().v[i] * c;
  return detail::make_op<T>(std::move(out), {a}, [c](Node<T>& self) {
    auto& p = *self.parents[0];
    p.ensure_grad();
    for (size_t i = 0; i < self.grad.size(); ++i) p.grad[i] += self.grad[i] * c;
  });
}

// Exact Gaussian-CDF GELU: x * Phi(x).
template <class T>
Var<T> gelu(const Var<T>& a) {
  NdArray<T> out(a.shape());
  for (size_t i = 0; i < out.numel(); ++i) {
    T x = a.value().v[i];
    out.v[i] = x * T(0.5) * (T(1) + std::erf(x / std::sqrt(T(2))));
  }
  return detail::make_op<T>(std::move(out), {a}, [](Node<T>& self) {
    auto& p = *self.parents[0];
    p.ensure_grad();
    const T inv_sqrt2 = T(1) / std::sqrt(T(2));
    const T inv_sqrt2pi = T(1) / std::sqrt(T(2) * T(M_PI));
    for (size_t i = 0; i < self.grad.size(); ++i) {
      T x = p.value.v[i];
      T cdf = T(0.5) * (T(1) + std::erf(x * inv_sqrt2));
      T pdf = inv_sqrt2pi * std::exp(-x * x / T(2));
      p.grad[i] += self.grad[i] * (cdf + x * pdf);
    }
  });
}

template <class T>
Var<T> mean_all(const Var<T>& a) {
  NdArray<T> out({1});
  T s = T(0);
  for (size_t i = 0; i < a.numel(); ++i) s += a.value().v[i];
  const size_t n = a.numel();
  out.v[0] = s / static_cast<T>(n);
  return detail::make_op<T>(std::move(out), {a}, [n](Node<T>& self) {
    auto& p = *self.parents[0];
    p.ensure_grad();
    const T g = self.grad[0] / static_cast<T>(n);
    for (size_t i = 0; i < p.grad.size(); ++i) p.grad[i] += g;
  });
}

// x: [N, In], w: [Out, In], b: [Out] -> [N, Out]
template <class T>
Var<T> linear(const Var<T>& x, const Var<T>& w, const Var<T>& b) {
  if (x.shape().size() != 2 || w.shape().size() != 2 || b.shape().size() != 1)
    throw std::invalid_argument("linear: bad ranks");
  const int N = x.shape()[0], In = x.shape()[1], Out = w.shape()[0];
  if (w.shape()[1] != In || b.shape()[0] != Out)
    throw std::invalid_argument("linear: dimension mismatch");
  NdArray<T> out({N, Out});
  for (int i = 0; i < N; ++i)
    for (int o = 0; o < Out; ++o) {
      T s = b.value().v[static_cast<size_t>(o)];
      const T* xr = x.value().data() + static_cast<size_t>(i) * In;
      const T* wr = w.value().data() + static_cast<size_t>(o) * In;
      for (int k = 0; k < In; ++k) s += xr[k] * wr[k];
      out.v[static_cast<size_t>(i) * Out + o] = s;
    }
  return detail::make_op<T>(std::move(out), {x, w, b},
                            [N, In, Out](Node<T>& self) {
    auto& px = *self.parents[0];
    auto& pw = *self.parents[1];
    auto& pb = *self.parents[2];
    if (px.requires_grad) px.ensure_grad();
    if (pw.requires_grad) pw.ensure_grad();
    if (pb.requires_grad) pb.ensure_grad();
    for (int i = 0; i < N; ++i)
      for (int o = 0; o < Out; ++o) {
        T g = self.grad[static_cast<size_t>(i) * Out + o];
        if (g == T(0)) continue;
        if (pb.requires_grad) pb.grad[static_cast<size_t>(o)] += g;
        const T* xr = px.value.data() + static_cast<size_t>(i) * In;
        const T* wr = pw.value.data() + static_cast<size_t>(o) * In;
        if (px.requires_grad) {
          T* gx = px.grad.data() + static_cast<size_t>(i) * In;
          for (int k = 0; k < In; ++k) gx[k] += g * wr[k];
        }
        if (pw.requires_grad) {
          T* gw = pw.grad.data() + static_cast<size_t>(o) * In;
          for (int k = 0; k < In; ++k) gw[k] += g * xr[k];
        }
      }
  });
}

}  // namespace amir::nn
