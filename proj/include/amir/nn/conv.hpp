#pragma once
#include <Eigen/Dense>

#include "amir/nn/autodiff.hpp"

namespace amir::nn {

namespace detail {

template <class T>
using MatRM = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <class T>
using MapRM = Eigen::Map<MatRM<T>>;
template <class T>
using CMapRM = Eigen::Map<const MatRM<T>>;

// col: [C*kh*kw, OH*OW] for one sample, zero padding.
template <class T>
void im2col(const T* x, int C, int H, int W, int kh, int kw, int stride,
            int pad, int OH, int OW, T* col) {
  for (int c = 0; c < C; ++c)
    for (int ky = 0; ky < kh; ++ky)
      for (int kx = 0; kx < kw; ++kx) {
        T* dst = col + (static_cast<size_t>(c) * kh * kw + ky * kw + kx) *
                           (static_cast<size_t>(OH) * OW);
        for (int oy = 0; oy < OH; ++oy) {
          int iy = oy * stride + ky - pad;
          if (iy < 0 || iy >= H) {
            for (int ox = 0; ox < OW; ++ox) dst[oy * OW + ox] = T(0);
            continue;
          }
          const T* src = x + (static_cast<size_t>(c) * H + iy) * W;
          for (int ox = 0; ox < OW; ++ox) {
            int ix = ox * stride + kx - pad;
            dst[oy * OW + ox] = (ix < 0 || ix >= W) ? T(0) : src[ix];
          }
        }
      }
}

template <class T>
void col2im_add(const T* col, int C, int H, int W, int kh, int kw, int stride,
                int pad, int OH, int OW, T* x) {
  for (int c = 0; c < C; ++c)
    for (int ky = 0; ky < kh; ++ky)
      for (int kx = 0; kx < kw; ++kx) {
        const T* src = col + (static_cast<size_t>(c) * kh * kw + ky * kw + kx) *
                                 (static_cast<size_t>(OH) * OW);
        for (int oy = 0; oy < OH; ++oy) {
          int iy = oy * stride + ky - pad;
          if (iy < 0 || iy >= H) continue;
          T* dst = x + (static_cast<size_t>(c) * H + iy) * W;
          for (int ox = 0; ox < OW; ++ox) {
            int ix = ox * stride + kx - pad;
            if (ix >= 0 && ix < W) dst[ix] += src[oy * OW + ox];
          }
        }
      }
}

}  // namespace detail

// x: [N,C,H,W], w: [OC,C,kh,kw], b: [OC]. Cross-correlation, zero padding.
template <class T>
Var<T> conv2d(const Var<T>& x, const Var<T>& w, const Var<T>& b, int stride = 1,
              int pad = -1) {
  if (x.shape().size() != 4 || w.shape().size() != 4)
    throw std::invalid_argument("conv2d: need 4-d input and weight");
  const int N = x.shape()[0], C = x.shape()[1], H = x.shape()[2], W = x.shape()[3];
  const int OC = w.shape()[0], kh = w.shape()[2], kw = w.shape()[3];
  if (w.shape()[1] != C) throw std::invalid_argument("conv2d: channel mismatch");
  if (kh % 2 == 0 || kw % 2 == 0)
    throw std::invalid_argument("conv2d: kernel must be odd-sized");
  if (pad < 0) pad = kh / 2;  // size-preserving default at stride 1
  const int OH = (H + 2 * pad - kh) / stride + 1;
  const int OW = (W + 2 * pad - kw) / stride + 1;
  const int K = C * kh * kw;

  NdArray<T> out({N, OC, OH, OW});
  {
    std::vector<T> col(static_cast<size_t>(K) * OH * OW);
    detail::CMapRM<T> wm(w.value().data(), OC, K);
    for (int n = 0; n < N; ++n) {
      detail::im2col(x.value().data() + static_cast<size_t>(n) * C * H * W, C,
                     H, W, kh, kw, stride, pad, OH, OW, col.data());
      detail::CMapRM<T> cm(col.data(), K, static_cast<size_t>(OH) * OW);
      detail::MapRM<T> ym(out.data() + static_cast<size_t>(n) * OC * OH * OW,
                          OC, static_cast<size_t>(OH) * OW);
      ym.noalias() = wm * cm;
      for (int oc = 0; oc < OC; ++oc)
        ym.row(oc).array() += b.value().v[static_cast<size_t>(oc)];
    }
  }
  auto bwd = [N, C, H, W, OC, kh, kw, stride, pad, OH, OW, K](Node<T>& self) {
    auto& px = *self.parents[0];
    auto& pw = *self.parents[1];
    auto& pb = *self.parents[2];
    if (px.requires_grad) px.ensure_grad();
    if (pw.requires_grad) pw.ensure_grad();
    if (pb.requires_grad) pb.ensure_grad();
    std::vector<T> col(static_cast<size_t>(K) * OH * OW);
    std::vector<T> dcol(static_cast<size_t>(K) * OH * OW);
    detail::CMapRM<T> wm(pw.value.data(), OC, K);
    for (int n = 0; n < N; ++n) {
      detail::CMapRM<T> gy(self.grad.data() + static_cast<size_t>(n) * OC * OH * OW,
                           OC, static_cast<size_t>(OH) * OW);
      if (pb.requires_grad)
        for (int oc = 0; oc < OC; ++oc)
          pb.grad[static_cast<size_t>(oc)] += gy.row(oc).sum();
      if (pw.requires_grad || px.requires_grad)
        detail::im2col(px.value.data() + static_cast<size_t>(n) * C * H * W, C,
                       H, W, kh, kw, stride, pad, OH, OW, col.data());
      if (pw.requires_grad) {
        detail::CMapRM<T> cm(col.data(), K, static_cast<size_t>(OH) * OW);
        detail::MapRM<T> gw(pw.grad.data(), OC, K);
        gw.noalias() += gy * cm.transpose();
      }
      if (px.requires_grad) {
        detail::MapRM<T> dcm(dcol.data(), K, static_cast<size_t>(OH) * OW);
        dcm.noalias() = wm.transpose() * gy;
        detail::col2im_add(dcol.data(), C, H, W, kh, kw, stride, pad, OH, OW,
                           px.grad.data() + static_cast<size_t>(n) * C * H * W);
      }
    }
  };
  return detail::make_op<T>(std::move(out), {x, w, b}, std::move(bwd));
}

// [N,C,H,W] -> [N,C] spatial mean.
template <class T>
Var<T> global_average_pool(const Var<T>& x) {
  const int N = x.shape()[0], C = x.shape()[1], H = x.shape()[2], W = x.shape()[3];
  const size_t hw = static_cast<size_t>(H) * W;
  NdArray<T> out({N, C});
  for (int n = 0; n < N; ++n)
    for (int c = 0; c < C; ++c) {
      const T* p = x.value().data() + (static_cast<size_t>(n) * C + c) * hw;
      T s = T(0);
      for (size_t i = 0; i < hw; ++i) s += p[i];
      out.v[static_cast<size_t>(n) * C + c] = s / static_cast<T>(hw);
    }
  return detail::make_op<T>(std::move(out), {x}, [N, C, hw](Node<T>& self) {
    auto& p = *self.parents[0];
    p.ensure_grad();
    for (int n = 0; n < N; ++n)
      for (int c = 0; c < C; ++c) {
        T g = self.grad[static_cast<size_t>(n) * C + c] / static_cast<T>(hw);
        T* gp = p.grad.data() + (static_cast<size_t>(n) * C + c) * hw;
        for (size_t i = 0; i < hw; ++i) gp[i] += g;
      }
  });
}

// Nearest-neighbor 2x spatial upsampling.
template <class T>
Var<T> upsample_nearest2x(const Var<T>& x) {
  const int N = x.shape()[0], C = x.shape()[1], H = x.shape()[2], W = x.shape()[3];
  NdArray<T> out({N, C, 2 * H, 2 * W});
  for (int nc = 0; nc < N * C; ++nc) {
    const T* src = x.value().data() + static_cast<size_t>(nc) * H * W;
    T* dst = out.data() + static_cast<size_t>(nc) * 4 * H * W;
    for (int y = 0; y < 2 * H; ++y)
      for (int xx = 0; xx < 2 * W; ++xx)
        dst[static_cast<size_t>(y) * 2 * W + xx] = src[static_cast<size_t>(y / 2) * W + xx / 2];
  }
  return detail::make_op<T>(std::move(out), {x}, [N, C, H, W](Node<T>& self) {
    auto& p = *self.parents[0];
    p.ensure_grad();
    for (int nc = 0; nc < N * C; ++nc) {
      const T* g = self.grad.data() + static_cast<size_t>(nc) * 4 * H * W;
      T* dst = p.grad.data() + static_cast<size_t>(nc) * H * W;
      for (int y = 0; y < 2 * H; ++y)
        for (int xx = 0; xx < 2 * W; ++xx)
          dst[static_cast<size_t>(y / 2) * W + xx / 2] += g[static_cast<size_t>(y) * 2 * W + xx];
    }
  });
}

// Channel concatenation of two [N,C,H,W] maps.
template <class T>
Var<T> channel_concat(const Var<T>& a, const Var<T>& b) {
  const int N = a.shape()[0], Ca = a.shape()[1], H = a.shape()[2], W = a.shape()[3];
  const int Cb = b.shape()[1];
  if (b.shape()[0] != N || b.shape()[2] != H || b.shape()[3] != W)
    throw std::invalid_argument("channel_concat: spatial/batch mismatch");
  const size_t hw = static_cast<size_t>(H) * W;
  NdArray<T> out({N, Ca + Cb, H, W});
  for (int n = 0; n < N; ++n) {
    std::copy_n(a.value().data() + static_cast<size_t>(n) * Ca * hw, Ca * hw,
                out.data() + static_cast<size_t>(n) * (Ca + Cb) * hw);
    std::copy_n(b.value().data() + static_cast<size_t>(n) * Cb * hw, Cb * hw,
                out.data() + (static_cast<size_t>(n) * (Ca + Cb) + Ca) * hw);
  }
  return detail::make_op<T>(std::move(out), {a, b}, [N, Ca, Cb, hw](Node<T>& self) {
    auto& pa = *self.parents[0];
    auto& pb = *self.parents[1];
    if (pa.requires_grad) pa.ensure_grad();
    if (pb.requires_grad) pb.ensure_grad();
    for (int n = 0; n < N; ++n) {
      const T* g = self.grad.data() + static_cast<size_t>(n) * (Ca + Cb) * hw;
      if (pa.requires_grad) {
        T* ga = pa.grad.data() + static_cast<size_t>(n) * Ca * hw;
        for (size_t i = 0; i < static_cast<size_t>(Ca) * hw; ++i) ga[i] += g[i];
      }
      if (pb.requires_grad) {
        T* gb = pb.grad.data() + static_cast<size_t>(n) * Cb * hw;
        for (size_t i = 0; i < static_cast<size_t>(Cb) * hw; ++i)
          gb[i] += g[static_cast<size_t>(Ca) * hw + i];
      }
    }
  });
}

// NAFNet simple gate: split channels in half, multiply the halves.
template <class T>
Var<T> simple_gate(const Var<T>& x) {
  const int N = x.shape()[0], C = x.shape()[1], H = x.shape()[2], W = x.shape()[3];
  if (C % 2 != 0) throw std::invalid_argument("simple_gate: odd channel count");
  const int Ch = C / 2;
  const size_t hw = static_cast<size_t>(H) * W;
  NdArray<T> out({N, Ch, H, W});
  for (int n = 0; n < N; ++n) {
    const T* a = x.value().data() + static_cast<size_t>(n) * C * hw;
    const T* b = a + static_cast<size_t>(Ch) * hw;
    T* o = out.data() + static_cast<size_t>(n) * Ch * hw;
    for (size_t i = 0; i < static_cast<size_t>(Ch) * hw; ++i) o[i] = a[i] * b[i];
  }
  return detail::make_op<T>(std::move(out), {x}, [N, C, Ch, hw](Node<T>& self) {
    auto& p = *self.parents[0];
    p.ensure_grad();
    for (int n = 0; n < N; ++n) {
      const T* a = p.value.data() + static_cast<size_t>(n) * C * hw;
      const T* b = a + static_cast<size_t>(Ch) * hw;
      T* ga = p.grad.data() + static_cast<size_t>(n) * C * hw;
      T* gb = ga + static_cast<size_t>(Ch) * hw;
      const T* g = self.grad.data() + static_cast<size_t>(n) * Ch * hw;
      for (size_t i = 0; i < static_cast<size_t>(Ch) * hw; ++i) {
        ga[i] += g[i] * b[i];
        gb[i] += g[i] * a[i];
      }
    }
  });
}

// Replicate-edge padding (top, bottom, left, right).
template <class T>
Var<T> replicate_pad(const Var<T>& x, int pt, int pb, int pl, int pr) {
  const int N = x.shape()[0], C = x.shape()[1], H = x.shape()[2], W = x.shape()[3];
  const int OH = H + pt + pb, OW = W + pl + pr;
  NdArray<T> out({N, C, OH, OW});
  auto clampi = [](int v, int lo, int hi) { return v < lo ? lo : (v > hi ? hi : v); };
  for (int nc = 0; nc < N * C; ++nc) {
    const T* src = x.value().data() + static_cast<size_t>(nc) * H * W;
    T* dst = out.data() + static_cast<size_t>(nc) * OH * OW;
    for (int y = 0; y < OH; ++y) {
      int sy = clampi(y - pt, 0, H - 1);
      for (int xx = 0; xx < OW; ++xx)
        dst[static_cast<size_t>(y) * OW + xx] =
            src[static_cast<size_t>(sy) * W + clampi(xx - pl, 0, W - 1)];
    }
  }
  return detail::make_op<T>(std::move(out), {x},
                            [N, C, H, W, pt, pl, OH, OW](Node<T>& self) {
    auto& p = *self.parents[0];
    p.ensure_grad();
    auto clampi = [](int v, int lo, int hi) { return v < lo ? lo : (v > hi ? hi : v); };
    for (int nc = 0; nc < N * C; ++nc) {
      const T* g = self.grad.data() + static_cast<size_t>(nc) * OH * OW;
      T* dst = p.grad.data() + static_cast<size_t>(nc) * H * W;
      for (int y = 0; y < OH; ++y) {
        int sy = clampi(y - pt, 0, H - 1);
        for (int xx = 0; xx < OW; ++xx)
          dst[static_cast<size_t>(sy) * W + clampi(xx - pl, 0, W - 1)] +=
              g[static_cast<size_t>(y) * OW + xx];
      }
    }
  });
}

// Crop a centered-at-origin region (the inverse of replicate_pad here).
template <class T>
Var<T> crop(const Var<T>& x, int top, int left, int h, int w) {
  const int N = x.shape()[0], C = x.shape()[1], H = x.shape()[2], W = x.shape()[3];
  if (top + h > H || left + w > W) throw std::invalid_argument("crop: out of bounds");
  NdArray<T> out({N, C, h, w});
  for (int nc = 0; nc < N * C; ++nc)
    for (int y = 0; y < h; ++y)
      std::copy_n(x.value().data() + (static_cast<size_t>(nc) * H + top + y) * W + left,
                  w, out.data() + (static_cast<size_t>(nc) * h + y) * w);
  return detail::make_op<T>(std::move(out), {x},
                            [N, C, H, W, top, left, h, w](Node<T>& self) {
    auto& p = *self.parents[0];
    p.ensure_grad();
    for (int nc = 0; nc < N * C; ++nc)
      for (int y = 0; y < h; ++y) {
        const T* g = self.grad.data() + (static_cast<size_t>(nc) * h + y) * w;
        T* dst = p.grad.data() + (static_cast<size_t>(nc) * H + top + y) * W + left;
        for (int xx = 0; xx < w; ++xx) dst[xx] += g[xx];
      }
  });
}

// Depthwise separable valid-mode filtering with a fixed symmetric 1-D window
// (used by the SSIM loss). No gradient to the window.
template <class T>
Var<T> window_filter_valid(const Var<T>& x, const std::vector<T>& win) {
  const int N = x.shape()[0], C = x.shape()[1], H = x.shape()[2], W = x.shape()[3];
  const int K = static_cast<int>(win.size());
  if (H < K || W < K) throw std::invalid_argument("window_filter_valid: image smaller than window");
  const int OH = H - K + 1, OW = W - K + 1;
  NdArray<T> out({N, C, OH, OW});
  std::vector<T> tmp(static_cast<size_t>(H) * OW);
  for (int nc = 0; nc < N * C; ++nc) {
    const T* src = x.value().data() + static_cast<size_t>(nc) * H * W;
    for (int y = 0; y < H; ++y)
      for (int xx = 0; xx < OW; ++xx) {
        T s = T(0);
        for (int t = 0; t < K; ++t) s += win[static_cast<size_t>(t)] * src[static_cast<size_t>(y) * W + xx + t];
        tmp[static_cast<size_t>(y) * OW + xx] = s;
      }
    T* dst = out.data() + static_cast<size_t>(nc) * OH * OW;
    for (int y = 0; y < OH; ++y)
      for (int xx = 0; xx < OW; ++xx) {
        T s = T(0);
        for (int t = 0; t < K; ++t) s += win[static_cast<size_t>(t)] * tmp[static_cast<size_t>(y + t) * OW + xx];
        dst[static_cast<size_t>(y) * OW + xx] = s;
      }
  }
  auto bwd = [N, C, H, W, K, OH, OW, win](Node<T>& self) {
    auto& p = *self.parents[0];
    p.ensure_grad();
    // transpose of valid correlation: scatter each output grad over its window
    std::vector<T> tmp(static_cast<size_t>(OH) * W, T(0));
    for (int nc = 0; nc < N * C; ++nc) {
      const T* g = self.grad.data() + static_cast<size_t>(nc) * OH * OW;
      std::fill(tmp.begin(), tmp.end(), T(0));
      for (int y = 0; y < OH; ++y)
        for (int xx = 0; xx < OW; ++xx) {
          T gv = g[static_cast<size_t>(y) * OW + xx];
          if (gv == T(0)) continue;
          for (int t = 0; t < K; ++t) tmp[static_cast<size_t>(y) * W + xx + t] += gv * win[static_cast<size_t>(t)];
        }
      T* dst = p.grad.data() + static_cast<size_t>(nc) * H * W;
      for (int y = 0; y < OH; ++y)
        for (int xx = 0; xx < W; ++xx) {
          T gv = tmp[static_cast<size_t>(y) * W + xx];
          if (gv == T(0)) continue;
          for (int t = 0; t < K; ++t) dst[static_cast<size_t>(y + t) * W + xx] += gv * win[static_cast<size_t>(t)];
        }
    }
  };
  return detail::make_op<T>(std::move(out), {x}, std::move(bwd));
}

}  // namespace amir::nn
