#pragma once
#include <cstdint>
#include <string>
#include <vector>

#include "amir/image.hpp"

namespace amir {

enum class DegKind {
  gaussian_noise,
  gaussian_blur,
  motion_blur,
  defocus_blur,
  low_light,
  block_compression,
};

std::string to_string(DegKind k);
DegKind deg_kind_from_string(const std::string& s);

// One synthetic degradation instance. Which params are meaningful depends
// on kind:
//   gaussian_noise:    sigma (noise std, unit-interval scale)
//   gaussian_blur:     sigma (kernel std; sigma <= 0.01 is the identity)
//   motion_blur:       length (pixels), angle (degrees)
//   defocus_blur:      radius (disk radius, pixels)
//   low_light:         gamma (>1), gain (in (0,1])
//   block_compression: quality (1..100)
struct DegradationSpec {
  DegKind kind = DegKind::gaussian_noise;
  double sigma = 0.0;
  double length = 0.0;
  double angle = 0.0;
  double radius = 0.0;
  double gamma = 1.0;
  double gain = 1.0;
  int quality = 100;
  std::uint64_t seed = 0;
};

// Pure function of (img, spec); output clipped to [0,1], same dimensions.
Image apply_degradation(const Image& img, const DegradationSpec& spec);

// Kernel builders exposed for tests (each sums to 1).
std::vector<float> motion_blur_kernel(double length, double angle_deg,
                                      int& ksize);
std::vector<float> defocus_kernel(double radius, int& ksize);

}  // namespace amir
