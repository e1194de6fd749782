#include "amir/image.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

namespace amir {

namespace {

// Reads one whitespace-delimited token, skipping '#' comments.
std::string next_token(std::istream& in) {
  std::string tok;
  for (;;) {
    int c = in.get();
    if (c == EOF) return tok;
    if (c == '#') {
      while (c != EOF && c != '\n') c = in.get();
      continue;
    }
    if (std::isspace(c)) {
      if (!tok.empty()) return tok;
      continue;
    }
    tok.push_back(static_cast<char>(c));
  }
}

}  // namespace

Image load_image(const std::string& path) {
  if (!std::filesystem::exists(path))
    throw FileMissingError("image file not found: " + path);
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ImageIoError("cannot open: " + path);

  std::string magic = next_token(in);
  int channels;
  if (magic == "P6")
    channels = 3;
  else if (magic == "P5")
    channels = 1;
  else
    throw UnsupportedFormatError("unsupported image format '" + magic +
                                 "' in " + path + " (expect binary PPM/PGM)");

  int w = 0, h = 0, maxval = 0;
  try {
    w = std::stoi(next_token(in));
    h = std::stoi(next_token(in));
    maxval = std::stoi(next_token(in));
  } catch (const std::exception&) {
    throw CorruptDataError("bad PPM/PGM header in " + path);
  }
  if (w <= 0 || h <= 0) throw CorruptDataError("bad dimensions in " + path);
  if (maxval != 255)
    throw UnsupportedFormatError("only 8-bit images supported: " + path);

  Image img(h, w, channels);
  std::vector<unsigned char> raw(img.size());
  in.read(reinterpret_cast<char*>(raw.data()), raw.size());
  if (static_cast<size_t>(in.gcount()) != raw.size())
    throw CorruptDataError("truncated pixel data in " + path);
  for (size_t i = 0; i < raw.size(); ++i) img.data[i] = raw[i] / 255.f;
  return img;
}

void save_image(const Image& img, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ImageIoError("cannot write: " + path);
  out << (img.channels == 1 ? "P5" : "P6") << "\n"
      << img.width << " " << img.height << "\n255\n";
  std::vector<unsigned char> raw(img.size());
  for (size_t i = 0; i < raw.size(); ++i) {
    float v = img.data[i];
    v = v < 0.f ? 0.f : (v > 1.f ? 1.f : v);
    raw[i] = static_cast<unsigned char>(std::floor(v * 255.f + 0.5f));
  }
  out.write(reinterpret_cast<const char*>(raw.data()), raw.size());
  if (!out) throw ImageIoError("write failed: " + path);
}

ImagePair random_patch(const ImagePair& pair, int size, std::mt19937_64& rng) {
  const Image& d = pair.degraded;
  if (!d.same_shape(pair.clean))
    throw std::invalid_argument("pair images differ in shape");
  if (size > d.height || size > d.width)
    throw std::invalid_argument("patch size exceeds image dimensions");
  std::uniform_int_distribution<int> dy(0, d.height - size);
  std::uniform_int_distribution<int> dx(0, d.width - size);
  int oy = dy(rng), ox = dx(rng);
  ImagePair out;
  out.degraded = Image(size, size, d.channels);
  out.clean = Image(size, size, d.channels);
  for (int y = 0; y < size; ++y)
    for (int x = 0; x < size; ++x)
      for (int c = 0; c < d.channels; ++c) {
        out.degraded.at(y, x, c) = d.at(oy + y, ox + x, c);
        out.clean.at(y, x, c) = pair.clean.at(oy + y, ox + x, c);
      }
  return out;
}

}  // namespace amir
