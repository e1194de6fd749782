#pragma once
#include <string>

#include "amir/metrics.hpp"
#include "amir/nn/conv.hpp"
#include "amir/nn/loss.hpp"
#include "amir/nn/norm.hpp"
#include "amir/nn/params.hpp"

namespace amir {

enum class AblationVariant {
  full,
  no_ftb,
  no_dsln,
  no_gm,
  layers_1,
  layers_2,
  layers_3,
  layers_4,
};

std::string to_string(AblationVariant v);
AblationVariant variant_from_string(const std::string& s);

inline bool variant_uses_dsln(AblationVariant v) {
  return v != AblationVariant::no_dsln && v != AblationVariant::no_ftb;
}
inline bool variant_uses_gm(AblationVariant v) {
  return v != AblationVariant::no_gm && v != AblationVariant::no_ftb;
}
// layers_k caps the built tree depth; other variants use the full depth.
inline int variant_max_levels(AblationVariant v, int tree_levels) {
  switch (v) {
    case AblationVariant::layers_1: return 1;
    case AblationVariant::layers_2: return 2;
    case AblationVariant::layers_3: return 3;
    case AblationVariant::layers_4: return 4;
    default: return tree_levels;
  }
}

struct RestorerConfig {
  int in_channels = 3;
  std::vector<int> widths = {16, 32, 64};  // encoder scales (mirrored decoder)
  int repr_dim = 30;
  bool use_dsln = true;
  bool use_gm = true;
};

// U-shaped restoration network: feature transform blocks in the encoder and
// bottleneck, simplified NAF blocks in the decoder, skip concatenations, and
// a zero-initialized residual head (exact identity at initialization).
template <class T>
class Restorer {
 public:
  Restorer(nn::ParamStore<T>& store, RestorerConfig cfg = {})
      : ps_(&store), cfg_(std::move(cfg)) {
    if (ps_->has("rn.stem.w")) return;
    const auto& w = cfg_.widths;
    ps_->add_conv("rn.stem", w[0], cfg_.in_channels, 3);
    for (size_t s = 0; s < w.size(); ++s) {
      add_ftb("rn.enc" + std::to_string(s) + ".ftb0", w[s]);
      add_ftb("rn.enc" + std::to_string(s) + ".ftb1", w[s]);
      if (s + 1 < w.size())
        ps_->add_conv("rn.down" + std::to_string(s), w[s + 1], w[s], 3);
    }
    add_ftb("rn.bot.ftb0", w.back());
    add_ftb("rn.bot.ftb1", w.back());
    for (int s = static_cast<int>(w.size()) - 1; s >= 0; --s) {
      const int c = w[static_cast<size_t>(s)];
      auto pre = "rn.dec" + std::to_string(s);
      ps_->add_conv(pre + ".fuse", c, 2 * c, 1);
      add_naf(pre + ".naf0", c);
      add_naf(pre + ".naf1", c);
      if (s > 0) ps_->add_conv(pre + ".up", w[static_cast<size_t>(s - 1)], c, 3);
    }
    // zero-initialized output head keeps the network an exact identity
    ps_->add_constant("rn.out.w", {cfg_.in_channels, w[0], 3, 3}, T(0));
    ps_->add_constant("rn.out.b", {cfg_.in_channels}, T(0));
  }

  // y = x + s (*) GM(Conv(act(Conv(DSLN(x, r)))), r)
  nn::Var<T> ftb(const nn::Var<T>& x, const nn::Var<T>& r,
                 const std::string& pre) const {
    nn::Var<T> t;
    if (cfg_.use_dsln)
      t = nn::dsln(x, r, p(pre + ".dsln.wg"), p(pre + ".dsln.bg"),
                   p(pre + ".dsln.wb"), p(pre + ".dsln.bb"));
    else
      t = nn::layer_norm(x, p(pre + ".ln.gamma"), p(pre + ".ln.beta"));
    t = nn::conv2d(t, p(pre + ".c1.w"), p(pre + ".c1.b"));
    t = nn::conv2d(nn::gelu(t), p(pre + ".c2.w"), p(pre + ".c2.b"));
    if (cfg_.use_gm)
      t = nn::gating_modulation(t, r, p(pre + ".gm.w1"), p(pre + ".gm.b1"),
                                p(pre + ".gm.w2"), p(pre + ".gm.b2"));
    return nn::add(x, nn::scale_channels(t, p(pre + ".scale")));
  }

  // y = x + Conv(simple_gate(Conv(LN(x))))
  nn::Var<T> naf(const nn::Var<T>& x, const std::string& pre) const {
    auto t = nn::layer_norm(x, p(pre + ".ln.gamma"), p(pre + ".ln.beta"));
    t = nn::conv2d(t, p(pre + ".c1.w"), p(pre + ".c1.b"));
    t = nn::simple_gate(t);
    t = nn::conv2d(t, p(pre + ".c2.w"), p(pre + ".c2.b"));
    return nn::add(x, t);
  }

  // Full forward. Spatial sides must be multiples of 4; callers with other
  // sizes go through forward_padded.
  nn::Var<T> forward(const nn::Var<T>& img, const nn::Var<T>& r) const {
    const int H = img.shape()[2], W = img.shape()[3];
    if (H % 4 != 0 || W % 4 != 0)
      throw std::invalid_argument("restorer: dimensions must be multiples of 4");
    const size_t S = cfg_.widths.size();
    auto x = nn::conv2d(img, p("rn.stem.w"), p("rn.stem.b"));
    std::vector<nn::Var<T>> skips;
    for (size_t s = 0; s < S; ++s) {
      x = ftb(x, r, "rn.enc" + std::to_string(s) + ".ftb0");
      x = ftb(x, r, "rn.enc" + std::to_string(s) + ".ftb1");
      skips.push_back(x);
      if (s + 1 < S)
        x = nn::conv2d(x, p("rn.down" + std::to_string(s) + ".w"),
                       p("rn.down" + std::to_string(s) + ".b"), 2, 1);
    }
    x = ftb(x, r, "rn.bot.ftb0");
    x = ftb(x, r, "rn.bot.ftb1");
    for (int s = static_cast<int>(S) - 1; s >= 0; --s) {
      auto pre = "rn.dec" + std::to_string(s);
      x = nn::channel_concat(x, skips[static_cast<size_t>(s)]);
      x = nn::conv2d(x, p(pre + ".fuse.w"), p(pre + ".fuse.b"), 1, 0);
      x = naf(x, pre + ".naf0");
      x = naf(x, pre + ".naf1");
      if (s > 0) {
        x = nn::upsample_nearest2x(x);
        x = nn::conv2d(x, p(pre + ".up.w"), p(pre + ".up.b"));
      }
    }
    auto residual = nn::conv2d(x, p("rn.out.w"), p("rn.out.b"));
    return nn::add(img, residual);
  }

  // Replicate-pad to the next multiple of 4, run, crop back.
  nn::Var<T> forward_padded(const nn::Var<T>& img, const nn::Var<T>& r) const {
    const int H = img.shape()[2], W = img.shape()[3];
    const int ph = (4 - H % 4) % 4, pw = (4 - W % 4) % 4;
    if (ph == 0 && pw == 0) return forward(img, r);
    auto padded = nn::replicate_pad(img, 0, ph, 0, pw);
    return nn::crop(forward(padded, r), 0, 0, H, W);
  }

  const RestorerConfig& config() const { return cfg_; }

 private:
  void add_ftb(const std::string& pre, int c) {
    if (cfg_.use_dsln) {
      // identity conditioning at r = 0: gamma(r) ~ 1, beta(r) ~ 0
      ps_->add_constant(pre + ".dsln.wg", {c, cfg_.repr_dim}, T(0));
      ps_->add_constant(pre + ".dsln.bg", {c}, T(1));
      ps_->add_constant(pre + ".dsln.wb", {c, cfg_.repr_dim}, T(0));
      ps_->add_constant(pre + ".dsln.bb", {c}, T(0));
    } else {
      ps_->add_constant(pre + ".ln.gamma", {c}, T(1));
      ps_->add_constant(pre + ".ln.beta", {c}, T(0));
    }
    ps_->add_conv(pre + ".c1", c, c, 3);
    ps_->add_conv(pre + ".c2", c, c, 3);
    if (cfg_.use_gm) {
      // unit gate at init: GELU(b1) * b2 = 1, so the gate starts as a
      // pass-through and conditioning on r grows only as w1/w2 move off zero
      ps_->add_constant(pre + ".gm.w1", {c, cfg_.repr_dim}, T(0));
      ps_->add_constant(pre + ".gm.b1", {c}, T(1.144450718352879));
      ps_->add_constant(pre + ".gm.w2", {c, cfg_.repr_dim}, T(0));
      ps_->add_constant(pre + ".gm.b2", {c}, T(1));
    }
    // small nonzero scale keeps the branch (and its conditioning gradients)
    // live from the first step without destabilizing early training; identity
    // at init is guaranteed by the zero output head
    ps_->add_constant(pre + ".scale", {c}, T(0.1));
  }

  void add_naf(const std::string& pre, int c) {
    ps_->add_constant(pre + ".ln.gamma", {c}, T(1));
    ps_->add_constant(pre + ".ln.beta", {c}, T(0));
    ps_->add_conv(pre + ".c1", 2 * c, c, 3);
    ps_->add_conv(pre + ".c2", c, c, 3);
  }

  const nn::Var<T>& p(const std::string& name) const { return ps_->get(name); }
  nn::ParamStore<T>* ps_;
  RestorerConfig cfg_;
};

// L_res = smoothL1(R, Y) + alpha * L_ssim(R, Y)
template <class T>
nn::Var<T> restoration_loss(const nn::Var<T>& restored, const nn::Var<T>& target,
                            double alpha) {
  if (alpha < 0) throw std::invalid_argument("restoration_loss: alpha must be >= 0");
  auto l1 = nn::smooth_l1(restored, target);
  if (alpha == 0.0) return l1;
  const auto& wd = ssim_window();
  std::vector<T> win(wd.begin(), wd.end());
  return nn::add(l1, nn::mul_scalar(nn::ssim_loss(restored, target, win),
                                    static_cast<T>(alpha)));
}

// Stage 1 total: L_cls + L_res, both required finite.
template <class T>
nn::Var<T> total_loss_stage1(const nn::Var<T>& cls_loss, const nn::Var<T>& res_loss) {
  if (!std::isfinite(cls_loss.scalar()) || !std::isfinite(res_loss.scalar()))
    throw std::runtime_error("total_loss_stage1: non-finite loss term");
  return nn::add(cls_loss, res_loss);
}

}  // namespace amir
