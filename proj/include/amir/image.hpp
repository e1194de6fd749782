#pragma once
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace amir {

// Channel-last HWC image, values in [0,1].
struct Image {
  int height = 0;
  int width = 0;
  int channels = 0;  // 1 or 3
  std::vector<float> data;

  Image() = default;
  Image(int h, int w, int c, float fill = 0.f)
      : height(h), width(w), channels(c),
        data(static_cast<size_t>(h) * w * c, fill) {}

  float& at(int y, int x, int c) {
    return data[(static_cast<size_t>(y) * width + x) * channels + c];
  }
  float at(int y, int x, int c) const {
    return data[(static_cast<size_t>(y) * width + x) * channels + c];
  }
  size_t size() const { return data.size(); }
  bool same_shape(const Image& o) const {
    return height == o.height && width == o.width && channels == o.channels;
  }
};

struct ImageIoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct FileMissingError : ImageIoError {
  using ImageIoError::ImageIoError;
};
struct UnsupportedFormatError : ImageIoError {
  using ImageIoError::ImageIoError;
};
struct CorruptDataError : ImageIoError {
  using ImageIoError::ImageIoError;
};

// Lossless 8-bit I/O. Binary PPM (P6) for 3-channel, PGM (P5) for 1-channel.
// Loading divides by 255; saving quantizes with round-half-up.
Image load_image(const std::string& path);
void save_image(const Image& img, const std::string& path);

struct ImagePair {
  Image degraded;
  Image clean;
};

// Co-located random crop. Offsets drawn integer-uniform over
// [0, H-size] x [0, W-size], both extremes inclusive.
ImagePair random_patch(const ImagePair& pair, int size, std::mt19937_64& rng);

inline void clip01(Image& img) {
  for (float& v : img.data) v = v < 0.f ? 0.f : (v > 1.f ? 1.f : v);
}

}  // namespace amir
