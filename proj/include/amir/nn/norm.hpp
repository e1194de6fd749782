#pragma once
#include "amir/nn/autodiff.hpp"

namespace amir::nn {

inline constexpr double kNormEps = 1e-6;

// Normalizes over the channel axis at every (n, h, w) position, no affine.
template <class T>
Var<T> ln_base(const Var<T>& x, T eps = T(kNormEps)) {
  if (eps <= T(0)) throw std::invalid_argument("ln_base: eps must be > 0");
  if (x.shape().size() != 4) throw std::invalid_argument("ln_base: need 4-d input");
  const int N = x.shape()[0], C = x.shape()[1], H = x.shape()[2], W = x.shape()[3];
  const size_t hw = static_cast<size_t>(H) * W;
  NdArray<T> out(x.shape());
  NdArray<T> inv_std({N, H, W});
  for (int n = 0; n < N; ++n)
    for (size_t p = 0; p < hw; ++p) {
      const T* xp = x.value().data() + static_cast<size_t>(n) * C * hw + p;
      T mu = T(0);
      for (int c = 0; c < C; ++c) mu += xp[c * hw];
      mu /= static_cast<T>(C);
      T var = T(0);
      for (int c = 0; c < C; ++c) {
        T d = xp[c * hw] - mu;
        var += d * d;
      }
      var /= static_cast<T>(C);
      T is = T(1) / std::sqrt(var + eps);
      inv_std.v[static_cast<size_t>(n) * hw + p] = is;
      T* op = out.data() + static_cast<size_t>(n) * C * hw + p;
      for (int c = 0; c < C; ++c) op[c * hw] = (xp[c * hw] - mu) * is;
    }
  auto bwd = [N, C, hw, istd = std::move(inv_std)](Node<T>& self) {
    auto& p = *self.parents[0];
    p.ensure_grad();
    for (int n = 0; n < N; ++n)
      for (size_t q = 0; q < hw; ++q) {
        const T* gy = self.grad.data() + static_cast<size_t>(n) * C * hw + q;
        const T* y = self.value.data() + static_cast<size_t>(n) * C * hw + q;
        T* gx = p.grad.data() + static_cast<size_t>(n) * C * hw + q;
        T mg = T(0), mgy = T(0);
        for (int c = 0; c < C; ++c) {
          mg += gy[c * hw];
          mgy += gy[c * hw] * y[c * hw];
        }
        mg /= static_cast<T>(C);
        mgy /= static_cast<T>(C);
        T is = istd.v[static_cast<size_t>(n) * hw + q];
        for (int c = 0; c < C; ++c)
          gx[c * hw] += is * (gy[c * hw] - mg - y[c * hw] * mgy);
      }
  };
  return detail::make_op<T>(std::move(out), {x}, std::move(bwd));
}

// x[N,C,H,W] scaled/shifted by a per-channel parameter vector [C].
template <class T>
Var<T> scale_channels(const Var<T>& x, const Var<T>& s) {
  const int N = x.shape()[0], C = x.shape()[1];
  if (s.shape() != std::vector<int>{C})
    throw std::invalid_argument("scale_channels: need [C] vector");
  const size_t hw = static_cast<size_t>(x.shape()[2]) * x.shape()[3];
  NdArray<T> out(x.shape());
  for (int n = 0; n < N; ++n)
    for (int c = 0; c < C; ++c) {
      const T sv = s.value().v[static_cast<size_t>(c)];
      const T* xp = x.value().data() + (static_cast<size_t>(n) * C + c) * hw;
      T* op = out.data() + (static_cast<size_t>(n) * C + c) * hw;
      for (size_t i = 0; i < hw; ++i) op[i] = xp[i] * sv;
    }
  return detail::make_op<T>(std::move(out), {x, s}, [N, C, hw](Node<T>& self) {
    auto& px = *self.parents[0];
    auto& ps = *self.parents[1];
    if (px.requires_grad) px.ensure_grad();
    if (ps.requires_grad) ps.ensure_grad();
    for (int n = 0; n < N; ++n)
      for (int c = 0; c < C; ++c) {
        const T* g = self.grad.data() + (static_cast<size_t>(n) * C + c) * hw;
        if (px.requires_grad) {
          const T sv = ps.value.v[static_cast<size_t>(c)];
          T* gx = px.grad.data() + (static_cast<size_t>(n) * C + c) * hw;
          for (size_t i = 0; i < hw; ++i) gx[i] += g[i] * sv;
        }
        if (ps.requires_grad) {
          const T* xp = px.value.data() + (static_cast<size_t>(n) * C + c) * hw;
          T acc = T(0);
          for (size_t i = 0; i < hw; ++i) acc += g[i] * xp[i];
          ps.grad[static_cast<size_t>(c)] += acc;
        }
      }
  });
}

template <class T>
Var<T> shift_channels(const Var<T>& x, const Var<T>& s) {
  const int N = x.shape()[0], C = x.shape()[1];
  if (s.shape() != std::vector<int>{C})
    throw std::invalid_argument("shift_channels: need [C] vector");
  const size_t hw = static_cast<size_t>(x.shape()[2]) * x.shape()[3];
  NdArray<T> out(x.shape());
  for (int n = 0; n < N; ++n)
    for (int c = 0; c < C; ++c) {
      const T sv = s.value().v[static_cast<size_t>(c)];
      const T* xp = x.value().data() + (static_cast<size_t>(n) * C + c) * hw;
      T* op = out.data() + (static_cast<size_t>(n) * C + c) * hw;
      for (size_t i = 0; i < hw; ++i) op[i] = xp[i] + sv;
    }
  return detail::make_op<T>(std::move(out), {x, s}, [N, C, hw](Node<T>& self) {
    auto& px = *self.parents[0];
    auto& ps = *self.parents[1];
    if (px.requires_grad) px.ensure_grad();
    if (ps.requires_grad) ps.ensure_grad();
    for (int n = 0; n < N; ++n)
      for (int c = 0; c < C; ++c) {
        const T* g = self.grad.data() + (static_cast<size_t>(n) * C + c) * hw;
        if (px.requires_grad) {
          T* gx = px.grad.data() + (static_cast<size_t>(n) * C + c) * hw;
          for (size_t i = 0; i < hw; ++i) gx[i] += g[i];
        }
        if (ps.requires_grad) {
          T acc = T(0);
          for (size_t i = 0; i < hw; ++i) acc += g[i];
          ps.grad[static_cast<size_t>(c)] += acc;
        }
      }
  });
}

// Per-sample per-channel scale/shift, s: [N,C] (the DSLN/gating broadcast).
template <class T>
Var<T> scale_channels_per_sample(const Var<T>& x, const Var<T>& s) {
  const int N = x.shape()[0], C = x.shape()[1];
  if (s.shape() != std::vector<int>{N, C})
    throw std::invalid_argument("scale_channels_per_sample: need [N,C]");
  const size_t hw = static_cast<size_t>(x.shape()[2]) * x.shape()[3];
  NdArray<T> out(x.shape());
  for (int n = 0; n < N; ++n)
    for (int c = 0; c < C; ++c) {
      const T sv = s.value().v[static_cast<size_t>(n) * C + c];
      const T* xp = x.value().data() + (static_cast<size_t>(n) * C + c) * hw;
      T* op = out.data() + (static_cast<size_t>(n) * C + c) * hw;
      for (size_t i = 0; i < hw; ++i) op[i] = xp[i] * sv;
    }
  return detail::make_op<T>(std::move(out), {x, s}, [N, C, hw](Node<T>& self) {
    auto& px = *self.parents[0];
    auto& ps = *self.parents[1];
    if (px.requires_grad) px.ensure_grad();
    if (ps.requires_grad) ps.ensure_grad();
    for (int n = 0; n < N; ++n)
      for (int c = 0; c < C; ++c) {
        const T* g = self.grad.data() + (static_cast<size_t>(n) * C + c) * hw;
        if (px.requires_grad) {
          const T sv = ps.value.v[static_cast<size_t>(n) * C + c];
          T* gx = px.grad.data() + (static_cast<size_t>(n) * C + c) * hw;
          for (size_t i = 0; i < hw; ++i) gx[i] += g[i] * sv;
        }
        if (ps.requires_grad) {
          const T* xp = px.value.data() + (static_cast<size_t>(n) * C + c) * hw;
          T acc = T(0);
          for (size_t i = 0; i < hw; ++i) acc += g[i] * xp[i];
          ps.grad[static_cast<size_t>(n) * C + c] += acc;
        }
      }
  });
}

template <class T>
Var<T> shift_channels_per_sample(const Var<T>& x, const Var<T>& s) {
  const int N = x.shape()[0], C = x.shape()[1];
  if (s.shape() != std::vector<int>{N, C})
    throw std::invalid_argument("shift_channels_per_sample: need [N,C]");
  const size_t hw = static_cast<size_t>(x.shape()[2]) * x.shape()[3];
  NdArray<T> out(x.shape());
  for (int n = 0; n < N; ++n)
    for (int c = 0; c < C; ++c) {
      const T sv = s.value().v[static_cast<size_t>(n) * C + c];
      const T* xp = x.value().data() + (static_cast<size_t>(n) * C + c) * hw;
      T* op = out.data() + (static_cast<size_t>(n) * C + c) * hw;
      for (size_t i = 0; i < hw; ++i) op[i] = xp[i] + sv;
    }
  return detail::make_op<T>(std::move(out), {x, s}, [N, C, hw](Node<T>& self) {
    auto& px = *self.parents[0];
    auto& ps = *self.parents[1];
    if (px.requires_grad) px.ensure_grad();
    if (ps.requires_grad) ps.ensure_grad();
    for (int n = 0; n < N; ++n)
      for (int c = 0; c < C; ++c) {
        const T* g = self.grad.data() + (static_cast<size_t>(n) * C + c) * hw;
        if (px.requires_grad) {
          T* gx = px.grad.data() + (static_cast<size_t>(n) * C + c) * hw;
          for (size_t i = 0; i < hw; ++i) gx[i] += g[i];
        }
        if (ps.requires_grad) {
          T acc = T(0);
          for (size_t i = 0; i < hw; ++i) acc += g[i];
          ps.grad[static_cast<size_t>(n) * C + c] += acc;
        }
      }
  });
}

// Plain LN: (x - mu) / sqrt(var + eps) * gamma + beta, gamma/beta per channel.
template <class T>
Var<T> layer_norm(const Var<T>& x, const Var<T>& gamma, const Var<T>& beta,
                  T eps = T(kNormEps)) {
  return shift_channels(scale_channels(ln_base(x, eps), gamma), beta);
}

// Degradation-specific LN: affine parameters are affine in r.
// gamma(r) = r @ Wg^T + bg, beta(r) = r @ Wb^T + bb, applied per sample.
template <class T>
Var<T> dsln(const Var<T>& x, const Var<T>& r, const Var<T>& wg, const Var<T>& bg,
            const Var<T>& wb, const Var<T>& bb, T eps = T(kNormEps)) {
  if (r.shape().size() != 2 || r.shape()[0] != x.shape()[0])
    throw std::invalid_argument("dsln: r must be [N, R]");
  Var<T> g = linear(r, wg, bg);
  Var<T> b = linear(r, wb, bb);
  return shift_channels_per_sample(scale_channels_per_sample(ln_base(x, eps), g), b);
}

// phi(r) = GELU(W1 r + b1) (*) (W2 r + b2), out = x (*) phi(r) per channel.
template <class T>
Var<T> gating_modulation(const Var<T>& x, const Var<T>& r, const Var<T>& w1,
                         const Var<T>& b1, const Var<T>& w2, const Var<T>& b2) {
  if (r.shape().size() != 2 || r.shape()[0] != x.shape()[0])
    throw std::invalid_argument("gating_modulation: r must be [N, R]");
  Var<T> phi = mul(gelu(linear(r, w1, b1)), linear(r, w2, b2));
  return scale_channels_per_sample(x, phi);
}

}  // namespace amir::nn
