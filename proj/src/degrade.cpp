#include "amir/degrade.hpp"

#include <array>
#include <cmath>
#include <random>
#include <stdexcept>

#include "amir/rng.hpp"

namespace amir {

std::string to_string(DegKind k) {
  switch (k) {
    case DegKind::gaussian_noise: return "gaussian_noise";
    case DegKind::gaussian_blur: return "gaussian_blur";
    case DegKind::motion_blur: return "motion_blur";
    case DegKind::defocus_blur: return "defocus_blur";
    case DegKind::low_light: return "low_light";
    case DegKind::block_compression: return "block_compression";
  }
  throw std::logic_error("bad DegKind");
}

DegKind deg_kind_from_string(const std::string& s) {
  if (s == "gaussian_noise") return DegKind::gaussian_noise;
  if (s == "gaussian_blur") return DegKind::gaussian_blur;
  if (s == "motion_blur") return DegKind::motion_blur;
  if (s == "defocus_blur") return DegKind::defocus_blur;
  if (s == "low_light") return DegKind::low_light;
  if (s == "block_compression") return DegKind::block_compression;
  throw std::invalid_argument("unknown degradation kind: " + s);
}

namespace {

inline int clampi(int v, int lo, int hi) {
  return v < lo ? lo : (v > hi ? hi : v);
}

// 2D convolution with replicate-edge padding, kernel ksize x ksize.
Image conv_replicate(const Image& img, const std::vector<float>& kernel,
                     int ksize) {
  if (ksize > img.height || ksize > img.width)
    throw std::invalid_argument("kernel larger than image");
  const int r = ksize / 2;
  Image out(img.height, img.width, img.channels);
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x)
      for (int c = 0; c < img.channels; ++c) {
        double s = 0.0;
        for (int ky = 0; ky < ksize; ++ky) {
          int yy = clampi(y + ky - r, 0, img.height - 1);
          for (int kx = 0; kx < ksize; ++kx) {
            int xx = clampi(x + kx - r, 0, img.width - 1);
            s += kernel[ky * ksize + kx] * img.at(yy, xx, c);
          }
        }
        out.at(y, x, c) = static_cast<float>(s);
      }
  return out;
}

Image gaussian_blur(const Image& img, double sigma) {
  if (sigma <= 0.01) return img;  // documented identity limit
  const int r = static_cast<int>(std::ceil(3.0 * sigma));
  const int ksize = 2 * r + 1;
  std::vector<double> k(ksize);
  double sum = 0.0;
  for (int i = 0; i < ksize; ++i) {
    double d = i - r;
    k[i] = std::exp(-d * d / (2.0 * sigma * sigma));
    sum += k[i];
  }
  for (double& v : k) v /= sum;
  if (ksize > img.height || ksize > img.width)
    throw std::invalid_argument("blur kernel larger than image");

  // separable: horizontal then vertical, replicate padding
  Image tmp(img.height, img.width, img.channels);
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x)
      for (int c = 0; c < img.channels; ++c) {
        double s = 0.0;
        for (int t = 0; t < ksize; ++t)
          s += k[t] * img.at(y, clampi(x + t - r, 0, img.width - 1), c);
        tmp.at(y, x, c) = static_cast<float>(s);
      }
  Image out(img.height, img.width, img.channels);
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x)
      for (int c = 0; c < img.channels; ++c) {
        double s = 0.0;
        for (int t = 0; t < ksize; ++t)
          s += k[t] * tmp.at(clampi(y + t - r, 0, img.height - 1), x, c);
        out.at(y, x, c) = static_cast<float>(s);
      }
  return out;
}

// Standard JPEG luminance quantization table, zig-zag free (row major).
constexpr std::array<int, 64> kLumaQuant = {
    16, 11, 10, 16, 24,  40,  51,  61,  12, 12, 14, 19, 26,  58,  60,  55,
    14, 13, 16, 24, 40,  57,  69,  56,  14, 17, 22, 29, 51,  87,  80,  62,
    18, 22, 37, 56, 68,  109, 103, 77,  24, 35, 55, 64, 81,  104, 113, 92,
    49, 64, 78, 87, 103, 121, 120, 101, 72, 92, 95, 98, 112, 100, 103, 99};

void dct8(const double in[8], double out[8]) {
  for (int u = 0; u < 8; ++u) {
    double s = 0.0;
    for (int x = 0; x < 8; ++x)
      s += in[x] * std::cos((2 * x + 1) * u * M_PI / 16.0);
    double cu = (u == 0) ? std::sqrt(1.0 / 8.0) : std::sqrt(2.0 / 8.0);
    out[u] = cu * s;
  }
}

void idct8(const double in[8], double out[8]) {
  for (int x = 0; x < 8; ++x) {
    double s = 0.0;
    for (int u = 0; u < 8; ++u) {
      double cu = (u == 0) ? std::sqrt(1.0 / 8.0) : std::sqrt(2.0 / 8.0);
      s += cu * in[u] * std::cos((2 * x + 1) * u * M_PI / 16.0);
    }
    out[x] = s;
  }
}

// 8x8 block DCT with the luminance table scaled by quality; no entropy
// coding, per channel.
Image block_compress(const Image& img, int quality) {
  if (quality < 1 || quality > 100)
    throw std::invalid_argument("quality must be in [1,100]");
  const int scale = quality < 50 ? 5000 / quality : 200 - 2 * quality;
  std::array<double, 64> q;
  for (int i = 0; i < 64; ++i)
    q[i] = std::max(1, (kLumaQuant[i] * scale + 50) / 100);

  const int H = img.height, W = img.width;
  const int Hp = (H + 7) / 8 * 8, Wp = (W + 7) / 8 * 8;
  Image out(H, W, img.channels);
  double blk[8][8], tmp[8][8], row[8], col[8];
  for (int c = 0; c < img.channels; ++c) {
    for (int by = 0; by < Hp; by += 8)
      for (int bx = 0; bx < Wp; bx += 8) {
        // replicate-padded block, centered at 0 in byte scale
        for (int y = 0; y < 8; ++y)
          for (int x = 0; x < 8; ++x)
            blk[y][x] = img.at(clampi(by + y, 0, H - 1),
                               clampi(bx + x, 0, W - 1), c) * 255.0 - 128.0;
        for (int y = 0; y < 8; ++y) dct8(blk[y], tmp[y]);
        for (int x = 0; x < 8; ++x) {
          for (int y = 0; y < 8; ++y) row[y] = tmp[y][x];
          dct8(row, col);
          for (int y = 0; y < 8; ++y) tmp[y][x] = col[y];
        }
        for (int y = 0; y < 8; ++y)
          for (int x = 0; x < 8; ++x)
            tmp[y][x] = std::round(tmp[y][x] / q[y * 8 + x]) * q[y * 8 + x];
        for (int x = 0; x < 8; ++x) {
          for (int y = 0; y < 8; ++y) row[y] = tmp[y][x];
          idct8(row, col);
          for (int y = 0; y < 8; ++y) tmp[y][x] = col[y];
        }
        for (int y = 0; y < 8; ++y) {
          idct8(tmp[y], blk[y]);
          for (int x = 0; x < 8; ++x) {
            int yy = by + y, xx = bx + x;
            if (yy < H && xx < W)
              out.at(yy, xx, c) =
                  static_cast<float>((blk[y][x] + 128.0) / 255.0);
          }
        }
      }
  }
  clip01(out);
  return out;
}

}  // namespace

std::vector<float> motion_blur_kernel(double length, double angle_deg,
                                      int& ksize) {
  if (length < 1.0) throw std::invalid_argument("motion length must be >= 1");
  const int r = static_cast<int>(std::ceil(length / 2.0));
  ksize = 2 * r + 1;
  std::vector<double> k(static_cast<size_t>(ksize) * ksize, 0.0);
  const double th = angle_deg * M_PI / 180.0;
  const double dx = std::cos(th), dy = std::sin(th);
  // rasterize the centered segment with bilinear deposits
  const int steps = std::max(2, static_cast<int>(std::ceil(length * 8)));
  for (int i = 0; i < steps; ++i) {
    double t = (i / (steps - 1.0) - 0.5) * length;
    double x = r + t * dx, y = r + t * dy;
    int x0 = static_cast<int>(std::floor(x)), y0 = static_cast<int>(std::floor(y));
    double fx = x - x0, fy = y - y0;
    for (int oy = 0; oy <= 1; ++oy)
      for (int ox = 0; ox <= 1; ++ox) {
        int xx = x0 + ox, yy = y0 + oy;
        if (xx < 0 || yy < 0 || xx >= ksize || yy >= ksize) continue;
        double w = (ox ? fx : 1 - fx) * (oy ? fy : 1 - fy);
        k[yy * static_cast<size_t>(ksize) + xx] += w;
      }
  }
  double sum = 0.0;
  for (double v : k) sum += v;
  std::vector<float> out(k.size());
  for (size_t i = 0; i < k.size(); ++i)
    out[i] = static_cast<float>(k[i] / sum);
  return out;
}

std::vector<float> defocus_kernel(double radius, int& ksize) {
  if (radius <= 0.0) throw std::invalid_argument("disk radius must be > 0");
  const int r = static_cast<int>(std::ceil(radius));
  ksize = 2 * r + 1;
  std::vector<double> k(static_cast<size_t>(ksize) * ksize, 0.0);
  // 4x4 supersampled disk coverage per cell
  const int ss = 4;
  for (int y = 0; y < ksize; ++y)
    for (int x = 0; x < ksize; ++x) {
      int inside = 0;
      for (int sy = 0; sy < ss; ++sy)
        for (int sx = 0; sx < ss; ++sx) {
          double px = x - r + (sx + 0.5) / ss - 0.5;
          double py = y - r + (sy + 0.5) / ss - 0.5;
          if (px * px + py * py <= radius * radius) ++inside;
        }
      k[y * static_cast<size_t>(ksize) + x] = inside / double(ss * ss);
    }
  double sum = 0.0;
  for (double v : k) sum += v;
  std::vector<float> out(k.size());
  for (size_t i = 0; i < k.size(); ++i)
    out[i] = static_cast<float>(k[i] / sum);
  return out;
}

Image apply_degradation(const Image& img, const DegradationSpec& spec) {
  switch (spec.kind) {
    case DegKind::gaussian_noise: {
      if (spec.sigma < 0.0) throw std::invalid_argument("noise sigma < 0");
      if (spec.sigma == 0.0) return img;
      Image out = img;
      auto rng = make_rng(spec.seed);
      std::normal_distribution<double> n(0.0, spec.sigma);
      for (float& v : out.data) v = static_cast<float>(v + n(rng));
      clip01(out);
      return out;
    }
    case DegKind::gaussian_blur: {
      if (spec.sigma < 0.0) throw std::invalid_argument("blur sigma < 0");
      Image out = gaussian_blur(img, spec.sigma);
      clip01(out);
      return out;
    }
    case DegKind::motion_blur: {
      int ksize;
      auto k = motion_blur_kernel(spec.length, spec.angle, ksize);
      Image out = conv_replicate(img, k, ksize);
      clip01(out);
      return out;
    }
    case DegKind::defocus_blur: {
      int ksize;
      auto k = defocus_kernel(spec.radius, ksize);
      Image out = conv_replicate(img, k, ksize);
      clip01(out);
      return out;
    }
    case DegKind::low_light: {
      if (spec.gamma <= 1.0 || spec.gain <= 0.0 || spec.gain > 1.0)
        throw std::invalid_argument("low_light requires gamma > 1, gain in (0,1]");
      Image out = img;
      for (float& v : out.data)
        v = static_cast<float>(spec.gain * std::pow(double(v), spec.gamma));
      clip01(out);
      return out;
    }
    case DegKind::block_compression:
      return block_compress(img, spec.quality);
  }
  throw std::logic_error("bad DegKind");
}

}  // namespace amir
