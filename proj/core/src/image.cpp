#include "odl/image.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <iterator>
#include <random>
#include <sstream>

#include "odl/error.hpp"

namespace odl {

namespace {

// Reads the next whitespace-delimited header token, skipping '#' comments.
std::string next_token(const std::vector<std::uint8_t>& b, std::size_t& pos) {
  while (pos < b.size()) {
    if (b[pos] == '#') {
      while (pos < b.size() && b[pos] != '\n') ++pos;
    } else if (std::isspace(b[pos])) {
      ++pos;
    } else {
      break;
    }
  }
  std::string tok;
  while (pos < b.size() && !std::isspace(b[pos]) && b[pos] != '#') tok += static_cast<char>(b[pos++]);
  return tok;
}

int parse_dim(const std::string& tok) {
  if (tok.empty() || !std::all_of(tok.begin(), tok.end(), [](char c) { return c >= '0' && c <= '9'; })) {
    throw IngestionError("pgm: bad header field '" + tok + "'");
  }
  return std::stoi(tok);
}

std::uint8_t clamp_byte(double v) { return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L)); }

}  // namespace

GrayImage decode_pgm(const std::vector<std::uint8_t>& bytes) {
  std::size_t pos = 0;
  if (next_token(bytes, pos) != "P5") throw IngestionError("pgm: expected P5 magic");
  const int w = parse_dim(next_token(bytes, pos));
  const int h = parse_dim(next_token(bytes, pos));
  const int maxval = parse_dim(next_token(bytes, pos));
  if (w <= 0 || h <= 0) throw IngestionError("pgm: empty image");
  if (maxval != 255) throw IngestionError("pgm: only maxval 255 is supported");
  ++pos;  // single whitespace after maxval
  const std::size_t n = static_cast<std::size_t>(w) * h;
  if (bytes.size() < pos + n) throw IngestionError("pgm: truncated pixel data");
  GrayImage img(w, h);
  std::copy_n(bytes.begin() + static_cast<std::ptrdiff_t>(pos), n, img.pixels.begin());
  return img;
}

GrayImage read_pgm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IngestionError("cannot open image '" + path + "'");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  try {
    return decode_pgm(bytes);
  } catch (const IngestionError& e) {
    throw IngestionError(path + ": " + e.what());
  }
}

std::vector<std::uint8_t> encode_pgm(const GrayImage& img) {
  std::ostringstream head;
  head << "P5\n" << img.width << ' ' << img.height << "\n255\n";
  const std::string h = head.str();
  std::vector<std::uint8_t> out(h.begin(), h.end());
  out.insert(out.end(), img.pixels.begin(), img.pixels.end());
  return out;
}

void write_pgm(const std::string& path, const GrayImage& img) {
  const auto bytes = encode_pgm(img);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw RunError("cannot write image '" + path + "'");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw RunError("short write on '" + path + "'");
}

GrayImage flip_horizontal(const GrayImage& img) {
  GrayImage out(img.width, img.height);
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) out.at(img.width - 1 - x, y) = img.at(x, y);
  }
  return out;
}

AugmentParams AugmentParams::none() {
  AugmentParams p;
  p.p_exposure = p.p_contrast = p.p_noise = p.p_blur = p.p_vignette = p.p_flip = 0.0;
  return p;
}

void AugmentParams::validate() const {
  for (double p : {p_exposure, p_contrast, p_noise, p_blur, p_vignette, p_flip}) {
    if (!(p >= 0.0 && p <= 1.0)) throw ConfigError("augmentation probabilities must lie in [0, 1]");
  }
  if (!(exposure_min > 0 && exposure_min <= exposure_max)) throw ConfigError("bad exposure range");
  if (!(contrast_min > 0 && contrast_min <= contrast_max)) throw ConfigError("bad contrast range");
  if (!(noise_sigma_max >= 0)) throw ConfigError("bad noise sigma");
  if (blur_kernel_max < 1 || blur_kernel_max % 2 == 0) throw ConfigError("blur kernel must be odd and >= 1");
  if (!(vignette_max >= 0 && vignette_max <= 1)) throw ConfigError("vignette strength must lie in [0, 1]");
}

Augmented augment_image(const GrayImage& img, const AugmentParams& params, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  // Fixed draw order so every op sees the same stream whatever is enabled.
  const double r_exp = u01(rng), v_exp = u01(rng);
  const double r_con = u01(rng), v_con = u01(rng);
  const double r_noise = u01(rng), v_noise = u01(rng);
  const double r_blur = u01(rng), v_blur = u01(rng);
  const double r_vig = u01(rng), v_vig = u01(rng);
  const double r_flip = u01(rng);
  const std::uint64_t noise_seed = rng();

  Augmented out{img, false};
  const bool any_photometric = r_exp < params.p_exposure || r_con < params.p_contrast || r_noise < params.p_noise ||
                               r_blur < params.p_blur || r_vig < params.p_vignette;
  if (any_photometric) {
    std::vector<double> px(img.pixels.begin(), img.pixels.end());
    if (r_exp < params.p_exposure) {
      const double gain = params.exposure_min + v_exp * (params.exposure_max - params.exposure_min);
      for (auto& v : px) v *= gain;
    }
    if (r_con < params.p_contrast) {
      const double c = params.contrast_min + v_con * (params.contrast_max - params.contrast_min);
      double mean = 0.0;
      for (double v : px) mean += v;
      mean /= static_cast<double>(px.size());
      for (auto& v : px) v = mean + c * (v - mean);
    }
    if (r_blur < params.p_blur && params.blur_kernel_max >= 3) {
      const int choices = (params.blur_kernel_max - 1) / 2;  // kernels 3, 5, ...
      const int k = 3 + 2 * std::min(choices - 1, static_cast<int>(v_blur * choices));
      const int r = k / 2;
      std::vector<double> tmp(px.size());
      const int w = img.width, h = img.height;
      for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
          double s = 0.0;
          int cnt = 0;
          for (int dx = -r; dx <= r; ++dx) {
            const int xx = x + dx;
            if (xx < 0 || xx >= w) continue;
            s += px[static_cast<std::size_t>(y) * w + xx];
            ++cnt;
          }
          tmp[static_cast<std::size_t>(y) * w + x] = s / cnt;
        }
      }
      for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
          double s = 0.0;
          int cnt = 0;
          for (int dy = -r; dy <= r; ++dy) {
            const int yy = y + dy;
            if (yy < 0 || yy >= h) continue;
            s += tmp[static_cast<std::size_t>(yy) * w + x];
            ++cnt;
          }
          px[static_cast<std::size_t>(y) * w + x] = s / cnt;
        }
      }
    }
    if (r_vig < params.p_vignette) {
      const double strength = v_vig * params.vignette_max;
      const double cx = (img.width - 1) / 2.0, cy = (img.height - 1) / 2.0;
      const double rmax2 = cx * cx + cy * cy;
      for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) {
          const double r2 = ((x - cx) * (x - cx) + (y - cy) * (y - cy)) / rmax2;
          px[static_cast<std::size_t>(y) * img.width + x] *= 1.0 - strength * r2;
        }
      }
    }
    if (r_noise < params.p_noise) {
      const double sigma = v_noise * params.noise_sigma_max * 255.0;
      std::mt19937_64 nrng(noise_seed);
      std::normal_distribution<double> n01(0.0, 1.0);
      for (auto& v : px) v += sigma * n01(nrng);
    }
    for (std::size_t i = 0; i < px.size(); ++i) out.image.pixels[i] = clamp_byte(px[i]);
  }
  if (r_flip < params.p_flip) {
    out.image = flip_horizontal(out.image);
    out.flipped = true;
  }
  return out;
}

}  // namespace odl
