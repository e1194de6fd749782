#pragma once
#include "amir/nn/autodiff.hpp"
#include "amir/nn/conv.hpp"

namespace amir::nn {

// Mean over elements of 0.5 d^2 (|d| < 1) else |d| - 0.5, d = pred - target.
template <class T>
Var<T> smooth_l1(const Var<T>& pred, const Var<T>& target) {
  if (!same_shape(pred.shape(), target.shape()))
    throw std::invalid_argument("smooth_l1: shape mismatch");
  NdArray<T> out({1});
  const size_t n = pred.numel();
  T s = T(0);
  for (size_t i = 0; i < n; ++i) {
    T d = pred.value().v[i] - target.value().v[i];
    T a = std::abs(d);
    s += a < T(1) ? T(0.5) * d * d : a - T(0.5);
  }
  out.v[0] = s / static_cast<T>(n);
  return detail::make_op<T>(std::move(out), {pred, target}, [n](Node<T>& self) {
    auto& pp = *self.parents[0];
    auto& pt = *self.parents[1];
    const T g = self.grad[0] / static_cast<T>(n);
    if (pp.requires_grad) pp.ensure_grad();
    if (pt.requires_grad) pt.ensure_grad();
    for (size_t i = 0; i < n; ++i) {
      T d = pp.value.v[i] - pt.value.v[i];
      T dd = std::abs(d) < T(1) ? d : (d > T(0) ? T(1) : T(-1));
      if (pp.requires_grad) pp.grad[i] += g * dd;
      if (pt.requires_grad) pt.grad[i] -= g * dd;
    }
  });
}

// 1 - mean SSIM over valid 11x11 Gaussian windows, differentiable through
// the windowed statistics. window must be the normalized 1-D Gaussian taps.
template <class T>
Var<T> ssim_loss(const Var<T>& pred, const Var<T>& target,
                 const std::vector<T>& window) {
  if (!same_shape(pred.shape(), target.shape()))
    throw std::invalid_argument("ssim_loss: shape mismatch");
  const T C1 = T(0.01) * T(0.01), C2 = T(0.03) * T(0.03);
  Var<T> mu_x = window_filter_valid(pred, window);
  Var<T> mu_y = window_filter_valid(target, window);
  Var<T> m_xx = window_filter_valid(mul(pred, pred), window);
  Var<T> m_yy = window_filter_valid(mul(target, target), window);
  Var<T> m_xy = window_filter_valid(mul(pred, target), window);
  Var<T> mu_xx = mul(mu_x, mu_x);
  Var<T> mu_yy = mul(mu_y, mu_y);
  Var<T> var_x = sub(m_xx, mu_xx);
  Var<T> var_y = sub(m_yy, mu_yy);
  Var<T> cov = sub(m_xy, mul(mu_x, mu_y));
  Var<T> num = mul(add_scalar(mul_scalar(mul(mu_x, mu_y), T(2)), C1),
                   add_scalar(mul_scalar(cov, T(2)), C2));
  Var<T> den = mul(add_scalar(add(mu_xx, mu_yy), C1),
                   add_scalar(add(var_x, var_y), C2));
  Var<T> ssim_map = div(num, den);
  return add_scalar(mul_scalar(mean_all(ssim_map), T(-1)), T(1));
}

// Per-level softmax over the flat node vector. level_sizes gives the group
// widths in level order; entries past built_levels come out zero.
template <class T>
Var<T> per_level_softmax(const Var<T>& logits, const std::vector<int>& level_sizes,
                         int built_levels) {
  if (logits.shape().size() != 2)
    throw std::invalid_argument("per_level_softmax: need [N, D] logits");
  if (built_levels < 0 || built_levels > static_cast<int>(level_sizes.size()))
    throw std::invalid_argument("per_level_softmax: bad built_levels");
  const int N = logits.shape()[0], D = logits.shape()[1];
  NdArray<T> out({N, D});
  for (int n = 0; n < N; ++n) {
    const T* lp = logits.value().data() + static_cast<size_t>(n) * D;
    T* op = out.data() + static_cast<size_t>(n) * D;
    int off = 0;
    for (int l = 0; l < built_levels; ++l) {
      const int sz = level_sizes[static_cast<size_t>(l)];
      T mx = lp[off];
      for (int j = 1; j < sz; ++j) mx = std::max(mx, lp[off + j]);
      T sum = T(0);
      for (int j = 0; j < sz; ++j) {
        op[off + j] = std::exp(lp[off + j] - mx);
        sum += op[off + j];
      }
      for (int j = 0; j < sz; ++j) op[off + j] /= sum;
      off += sz;
    }
  }
  auto bwd = [N, D, level_sizes, built_levels](Node<T>& self) {
    auto& p = *self.parents[0];
    p.ensure_grad();
    for (int n = 0; n < N; ++n) {
      const T* y = self.value.data() + static_cast<size_t>(n) * D;
      const T* gy = self.grad.data() + static_cast<size_t>(n) * D;
      T* gx = p.grad.data() + static_cast<size_t>(n) * D;
      int off = 0;
      for (int l = 0; l < built_levels; ++l) {
        const int sz = level_sizes[static_cast<size_t>(l)];
        T dot = T(0);
        for (int j = 0; j < sz; ++j) dot += gy[off + j] * y[off + j];
        for (int j = 0; j < sz; ++j)
          gx[off + j] += y[off + j] * (gy[off + j] - dot);
        off += sz;
      }
    }
  };
  return detail::make_op<T>(std::move(out), {logits}, std::move(bwd));
}

// Sum over built levels of softmax cross-entropy between each level's logit
// group and the one-hot target, averaged over the batch.
// targets[n * L + l] = child node index within level l (local, 0-based).
template <class T>
Var<T> per_level_cross_entropy(const Var<T>& logits,
                               const std::vector<int>& targets,
                               const std::vector<int>& level_sizes,
                               int built_levels) {
  if (logits.shape().size() != 2)
    throw std::invalid_argument("per_level_cross_entropy: need [N, D] logits");
  if (built_levels < 1 || built_levels > static_cast<int>(level_sizes.size()))
    throw std::invalid_argument("per_level_cross_entropy: bad built_levels");
  const int N = logits.shape()[0], D = logits.shape()[1];
  const int L = static_cast<int>(level_sizes.size());
  if (static_cast<int>(targets.size()) != N * L)
    throw std::invalid_argument("per_level_cross_entropy: target count mismatch");
  for (int n = 0; n < N; ++n)
    for (int l = 0; l < built_levels; ++l) {
      int t = targets[static_cast<size_t>(n) * L + l];
      if (t < 0 || t >= level_sizes[static_cast<size_t>(l)])
        throw std::invalid_argument("per_level_cross_entropy: label out of range");
    }

  NdArray<T> out({1});
  // softmax probabilities cached for the backward pass
  NdArray<T> probs({N, D});
  T loss = T(0);
  for (int n = 0; n < N; ++n) {
    const T* lp = logits.value().data() + static_cast<size_t>(n) * D;
    T* pp = probs.data() + static_cast<size_t>(n) * D;
    int off = 0;
    for (int l = 0; l < built_levels; ++l) {
      const int sz = level_sizes[static_cast<size_t>(l)];
      T mx = lp[off];
      for (int j = 1; j < sz; ++j) mx = std::max(mx, lp[off + j]);
      T sum = T(0);
      for (int j = 0; j < sz; ++j) {
        pp[off + j] = std::exp(lp[off + j] - mx);
        sum += pp[off + j];
      }
      for (int j = 0; j < sz; ++j) pp[off + j] /= sum;
      const int t = targets[static_cast<size_t>(n) * L + l];
      loss -= std::log(std::max(pp[off + t], std::numeric_limits<T>::min()));
      off += sz;
    }
  }
  out.v[0] = loss / static_cast<T>(N);
  auto bwd = [N, D, L, targets, level_sizes, built_levels,
              probs = std::move(probs)](Node<T>& self) {
    auto& p = *self.parents[0];
    p.ensure_grad();
    const T g = self.grad[0] / static_cast<T>(N);
    for (int n = 0; n < N; ++n) {
      const T* pp = probs.data() + static_cast<size_t>(n) * D;
      T* gx = p.grad.data() + static_cast<size_t>(n) * D;
      int off = 0;
      for (int l = 0; l < built_levels; ++l) {
        const int sz = level_sizes[static_cast<size_t>(l)];
        const int t = targets[static_cast<size_t>(n) * L + l];
        for (int j = 0; j < sz; ++j)
          gx[off + j] += g * (pp[off + j] - (j == t ? T(1) : T(0)));
        off += sz;
      }
    }
  };
  return detail::make_op<T>(std::move(out), {logits}, std::move(bwd));
}

}  // namespace amir::nn
