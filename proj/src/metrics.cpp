#include "amir/metrics.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace amir {

double psnr(const Image& a, const Image& b) {
  if (!a.same_shape(b)) throw std::invalid_argument("psnr: shape mismatch");
  double mse = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    double d = static_cast<double>(a.data[i]) - b.data[i];
    mse += d * d;
  }
  mse /= static_cast<double>(a.size());
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(1.0 / mse);
}

const std::vector<double>& ssim_window() {
  static const std::vector<double> w = [] {
    std::vector<double> k(11);
    const double sigma = 1.5;
    double sum = 0.0;
    for (int i = 0; i < 11; ++i) {
      double d = i - 5.0;
      k[i] = std::exp(-d * d / (2.0 * sigma * sigma));
      sum += k[i];
    }
    for (double& v : k) v /= sum;
    return k;
  }();
  return w;
}

namespace {

// Separable valid-mode Gaussian filter of one channel plane.
// in: H x W (stride = channels), out: (H-10) x (W-10).
void gauss_valid(const Image& img, int c, std::vector<double>& tmp,
                 std::vector<double>& out) {
  const auto& k = ssim_window();
  const int H = img.height, W = img.width, Wv = W - 10;
  tmp.assign(static_cast<size_t>(H) * Wv, 0.0);
  for (int y = 0; y < H; ++y)
    for (int x = 0; x < Wv; ++x) {
      double s = 0.0;
      for (int t = 0; t < 11; ++t) s += k[t] * img.at(y, x + t, c);
      tmp[static_cast<size_t>(y) * Wv + x] = s;
    }
  const int Hv = H - 10;
  out.assign(static_cast<size_t>(Hv) * Wv, 0.0);
  for (int y = 0; y < Hv; ++y)
    for (int x = 0; x < Wv; ++x) {
      double s = 0.0;
      for (int t = 0; t < 11; ++t) s += k[t] * tmp[(y + t) * static_cast<size_t>(Wv) + x];
      out[static_cast<size_t>(y) * Wv + x] = s;
    }
}

}  // namespace

double ssim(const Image& a, const Image& b) {
  if (!a.same_shape(b)) throw std::invalid_argument("ssim: shape mismatch");
  if (a.height < 11 || a.width < 11)
    throw std::invalid_argument("ssim: image smaller than 11x11 window");

  const double C1 = 0.01 * 0.01, C2 = 0.03 * 0.03;
  const int Hv = a.height - 10, Wv = a.width - 10;

  // Moments are filtered products; mu terms reuse the same filter.
  Image aa(a.height, a.width, a.channels), bb = aa, ab = aa;
  for (size_t i = 0; i < a.size(); ++i) {
    aa.data[i] = a.data[i] * a.data[i];
    bb.data[i] = b.data[i] * b.data[i];
    ab.data[i] = a.data[i] * b.data[i];
  }

  std::vector<double> tmp, mu_a, mu_b, m_aa, m_bb, m_ab;
  double total = 0.0;
  for (int c = 0; c < a.channels; ++c) {
    gauss_valid(a, c, tmp, mu_a);
    gauss_valid(b, c, tmp, mu_b);
    gauss_valid(aa, c, tmp, m_aa);
    gauss_valid(bb, c, tmp, m_bb);
    gauss_valid(ab, c, tmp, m_ab);
    double acc = 0.0;
    for (size_t i = 0; i < mu_a.size(); ++i) {
      double ma = mu_a[i], mb = mu_b[i];
      double va = m_aa[i] - ma * ma;
      double vb = m_bb[i] - mb * mb;
      double cov = m_ab[i] - ma * mb;
      acc += ((2 * ma * mb + C1) * (2 * cov + C2)) /
             ((ma * ma + mb * mb + C1) * (va + vb + C2));
    }
    total += acc / (static_cast<double>(Hv) * Wv);
  }
  return total / a.channels;
}

}  // namespace amir
