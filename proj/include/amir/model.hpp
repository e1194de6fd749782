#pragma once
#include "amir/config.hpp"
#include "amir/drn.hpp"
#include "amir/image.hpp"
#include "amir/restorer.hpp"

namespace amir {

inline DrnConfig drn_config(const TrainConfig& cfg) {
  DrnConfig d;
  d.widths = cfg.drn_widths;
  DegTree tree{cfg.tree_levels, cfg.tree_branching};
  d.repr_dim = tree.flat_length();
  return d;
}

inline RestorerConfig rn_config(const TrainConfig& cfg) {
  RestorerConfig r;
  r.widths = cfg.rn_widths;
  DegTree tree{cfg.tree_levels, cfg.tree_branching};
  r.repr_dim = tree.flat_length();
  const AblationVariant v = cfg.ablation();
  r.use_dsln = variant_uses_dsln(v);
  r.use_gm = variant_uses_gm(v);
  return r;
}

inline nn::NdArray<float> image_to_tensor(const Image& img) {
  nn::NdArray<float> a({1, img.channels, img.height, img.width});
  for (int c = 0; c < img.channels; ++c)
    for (int y = 0; y < img.height; ++y)
      for (int x = 0; x < img.width; ++x)
        a.v[(static_cast<size_t>(c) * img.height + y) * img.width + x] =
            img.at(y, x, c);
  return a;
}

// All images must share one shape.
inline nn::NdArray<float> batch_to_tensor(const std::vector<const Image*>& imgs) {
  const Image& first = *imgs.front();
  nn::NdArray<float> a({static_cast<int>(imgs.size()), first.channels,
                        first.height, first.width});
  const size_t per = first.size() / 1;  // HWC count per image
  (void)per;
  size_t o = 0;
  for (const Image* img : imgs) {
    if (!img->same_shape(first))
      throw std::invalid_argument("batch_to_tensor: mixed image shapes");
    for (int c = 0; c < first.channels; ++c)
      for (int y = 0; y < first.height; ++y)
        for (int x = 0; x < first.width; ++x) a.v[o++] = img->at(y, x, c);
  }
  return a;
}

inline Image tensor_to_image(const nn::NdArray<float>& a, int n = 0) {
  const int C = a.shape[1], H = a.shape[2], W = a.shape[3];
  Image img(H, W, C);
  const size_t base = static_cast<size_t>(n) * C * H * W;
  for (int c = 0; c < C; ++c)
    for (int y = 0; y < H; ++y)
      for (int x = 0; x < W; ++x)
        img.at(y, x, c) = a.v[base + (static_cast<size_t>(c) * H + y) * W + x];
  return img;
}

}  // namespace amir
