#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace odl {

inline constexpr int kImageHeight = 96;
inline constexpr int kImageWidth = 160;

/// 8-bit grayscale image, row-major.
struct GrayImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;

  GrayImage() = default;
  GrayImage(int w, int h, std::uint8_t fill = 0)
      : width(w), height(h), pixels(static_cast<std::size_t>(w) * h, fill) {}

  std::uint8_t& at(int x, int y) { return pixels[static_cast<std::size_t>(y) * width + x]; }
  std::uint8_t at(int x, int y) const { return pixels[static_cast<std::size_t>(y) * width + x]; }

  friend bool operator==(const GrayImage&, const GrayImage&) = default;
};

/// Binary PGM (P5, maxval 255). Throws IngestionError on malformed files.
GrayImage read_pgm(const std::string& path);
GrayImage decode_pgm(const std::vector<std::uint8_t>& bytes);
std::vector<std::uint8_t> encode_pgm(const GrayImage& img);
void write_pgm(const std::string& path, const GrayImage& img);

GrayImage flip_horizontal(const GrayImage& img);

/// Photometric and geometric augmentation settings. Probabilities are per op.
struct AugmentParams {
  double p_exposure = 0.5;
  double exposure_min = 0.7, exposure_max = 1.3;
  double p_contrast = 0.5;
  double contrast_min = 0.7, contrast_max = 1.3;
  double p_noise = 0.5;
  double noise_sigma_max = 8.0 / 255.0;
  double p_blur = 0.2;
  int blur_kernel_max = 5;  ///< odd box kernel, 3..blur_kernel_max
  double p_vignette = 0.3;
  double vignette_max = 0.3;
  double p_flip = 0.5;

  static AugmentParams none();
  void validate() const;
};

struct Augmented {
  GrayImage image;
  bool flipped = false;
};

/// Deterministic given seed. Photometric ops leave labels alone; callers
/// mirror labels with mirror_y() when `flipped` is set.
Augmented augment_image(const GrayImage& img, const AugmentParams& params, std::uint64_t seed);

}  // namespace odl
