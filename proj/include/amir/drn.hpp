#pragma once
#include <string>

#include "amir/hierarchy.hpp"
#include "amir/nn/conv.hpp"
#include "amir/nn/loss.hpp"
#include "amir/nn/norm.hpp"
#include "amir/nn/params.hpp"

namespace amir {

// Degradation representation sub-network: convolutional encoder with
// residual stages and stride-2 downsampling, pooled to an embedding, plus
// two parallel MLP projectors (mask and attribute).
struct DrnConfig {
  int in_channels = 3;
  std::vector<int> widths = {16, 32, 64, 128};  // last width = embedding dim
  int proj_hidden = 64;
  int repr_dim = 30;

  int embed_dim() const { return widths.back(); }
};

template <class T>
class Drn {
 public:
  Drn(nn::ParamStore<T>& store, DrnConfig cfg = {})
      : ps_(&store), cfg_(std::move(cfg)) {
    const auto& w = cfg_.widths;
    if (!ps_->has("drn.stem.w")) {
      ps_->add_uniform("drn.stem.w", {w[0], cfg_.in_channels, 3, 3},
                       cfg_.in_channels * 9);
      ps_->add_constant("drn.stem.b", {w[0]}, T(0));
      for (size_t s = 0; s < w.size(); ++s) {
        auto pre = "drn.s" + std::to_string(s);
        ps_->add_conv(pre + ".c1", w[s], w[s], 3);
        ps_->add_conv(pre + ".c2", w[s], w[s], 3);
        if (s + 1 < w.size()) ps_->add_conv(pre + ".down", w[s + 1], w[s], 3);
      }
      ps_->add_linear("drn.pm.l1", cfg_.proj_hidden, cfg_.embed_dim());
      ps_->add_linear("drn.pm.l2", cfg_.repr_dim, cfg_.proj_hidden);
      ps_->add_linear("drn.pa.l1", cfg_.proj_hidden, cfg_.embed_dim());
      ps_->add_linear("drn.pa.l2", cfg_.repr_dim, cfg_.proj_hidden);
    }
  }

  // z = F(I), I as [N,C,H,W]; pooled so any size >= 16 works.
  nn::Var<T> encode(const nn::Var<T>& img) const {
    if (img.shape()[2] < 16 || img.shape()[3] < 16)
      throw std::invalid_argument("encode: image must be at least 16x16");
    auto x = nn::conv2d(img, p("drn.stem.w"), p("drn.stem.b"));
    for (size_t s = 0; s < cfg_.widths.size(); ++s) {
      auto pre = "drn.s" + std::to_string(s);
      auto h = nn::conv2d(x, p(pre + ".c1.w"), p(pre + ".c1.b"));
      h = nn::conv2d(nn::gelu(h), p(pre + ".c2.w"), p(pre + ".c2.b"));
      x = nn::add(x, h);  // residual connection
      x = nn::gelu(x);
      if (s + 1 < cfg_.widths.size())
        x = nn::conv2d(x, p(pre + ".down.w"), p(pre + ".down.b"), 2, 1);
    }
    return nn::global_average_pool(x);
  }

  nn::Var<T> mask_logits(const nn::Var<T>& z) const {
    auto h = nn::gelu(nn::linear(z, p("drn.pm.l1.w"), p("drn.pm.l1.b")));
    return nn::linear(h, p("drn.pm.l2.w"), p("drn.pm.l2.b"));
  }

  nn::Var<T> attr_project(const nn::Var<T>& z) const {
    auto h = nn::gelu(nn::linear(z, p("drn.pa.l1.w"), p("drn.pa.l1.b")));
    return nn::linear(h, p("drn.pa.l2.w"), p("drn.pa.l2.b"));
  }

  // r_m: per-level softmax over built levels, zero past them.
  nn::Var<T> mask_probs(const nn::Var<T>& logits, const DegTree& tree,
                        int built_levels) const {
    return nn::per_level_softmax(logits, tree.level_sizes(), built_levels);
  }

  const DrnConfig& config() const { return cfg_; }

 private:
  const nn::Var<T>& p(const std::string& name) const { return ps_->get(name); }
  nn::ParamStore<T>* ps_;
  DrnConfig cfg_;
};

// Eq.-style composition: stage 1 multiplies mask and attribute; stage 2 is
// the mask alone (the attribute projector is a stage-1-only device).
template <class T>
nn::Var<T> compose_representation(const nn::Var<T>& r_m, const nn::Var<T>& r_a,
                                  int stage) {
  if (stage == 1) return nn::mul(r_m, r_a);
  if (stage == 2) return r_m;
  throw std::invalid_argument("compose_representation: stage must be 1 or 2");
}

// Detach: value copied into a fresh constant leaf, cutting gradient flow.
template <class T>
nn::Var<T> detach(const nn::Var<T>& x) {
  return nn::Var<T>::constant(x.value());
}

}  // namespace amir
