#include "odl/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "odl/error.hpp"

namespace odl {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kStep = 1.0 / kNominalRateHz;

std::uint8_t to_byte(double v) { return static_cast<std::uint8_t>(std::clamp(std::lround(v * 255.0), 0L, 255L)); }

double uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

std::string frame_name(int k) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "frames/%06d.pgm", k);
  return buf;
}

// Relative pose drawn uniformly inside the range; x > 0.1 by construction of
// the range, the loop only guards against degenerate ranges.
Pose4 draw_relative(const PoseRange& r, std::mt19937_64& rng) {
  for (;;) {
    const double x = uniform(rng, r.x_min, r.x_max);
    const double y = x * uniform(rng, -r.bearing_max, r.bearing_max);
    const double z = uniform(rng, -r.z_max, r.z_max);
    const double yaw = uniform(rng, -kPi, kPi);
    if (x > 0.1) return {x, y, z, yaw};
  }
}

}  // namespace

DomainSpec DomainSpec::domain_a() { return DomainSpec{}; }

DomainSpec DomainSpec::domain_b() {
  DomainSpec d;
  d.name = "B";
  d.background_level = 0.55;
  d.background_gradient = -0.15;
  d.texture_amplitude = 0.22;
  d.texture_scale_px = 10.0;
  d.texture_seed = 7;
  d.subject_level = 0.30;
  d.mark_level = 0.85;
  d.subject_half_width_m = 0.22;
  d.subject_half_height_m = 0.30;
  d.subject_variation = 0.08;
  d.noise_sigma = 0.05;
  d.vignette = 0.3;
  return d;
}

void DomainSpec::validate(double max_range_m) const {
  auto unit = [&](double v, const char* what) {
    if (!(v >= 0.0 && v <= 1.0)) throw ConfigError("domain " + name + ": " + what + " must lie in [0, 1]");
  };
  unit(background_level, "background_level");
  unit(subject_level, "subject_level");
  unit(mark_level, "mark_level");
  unit(vignette, "vignette");
  if (!(std::abs(background_gradient) <= 1.0)) throw ConfigError("domain " + name + ": gradient out of range");
  if (!(texture_amplitude >= 0.0) || !(texture_scale_px > 0.0)) throw ConfigError("domain " + name + ": bad texture");
  if (!(noise_sigma >= 0.0) || !(subject_variation >= 0.0)) throw ConfigError("domain " + name + ": bad noise");
  if (!(focal_px > 0.0)) throw ConfigError("domain " + name + ": focal length must be positive");
  if (!(subject_half_width_m > 0.0) || !(subject_half_height_m > 0.0)) {
    throw ConfigError("domain " + name + ": subject size must be positive");
  }
  if (focal_px * std::min(subject_half_width_m, subject_half_height_m) / max_range_m < 1.0) {
    throw ConfigError("domain " + name + ": subject projects below one pixel at " + std::to_string(max_range_m) +
                      " m");
  }
}

void SynthConfig::validate() const {
  if (!(range.x_min > 0.1) || !(range.x_max > range.x_min) || !(range.bearing_max > 0) || !(range.z_max >= 0)) {
    throw ConfigError("synth: bad pose range");
  }
  a.validate(range.x_max);
  b.validate(range.x_max);
  if (pretrain_samples < 1 || subjects < 1 || !(flight_seconds > 0)) {
    throw ConfigError("synth: sample counts and flight duration must be positive");
  }
  if (!(still_min_s > 0 && still_min_s <= still_max_s && move_min_s > 0 && move_min_s <= move_max_s)) {
    throw ConfigError("synth: bad still/move phase durations");
  }
  if (!(walk_speed_min >= 0 && walk_speed_min <= walk_speed_max)) throw ConfigError("synth: bad walking speeds");
  if (!(relative_time_constant_s > 0) || !(yaw_step_sigma >= 0)) throw ConfigError("synth: bad motion parameters");
  odometry.validate();
}

GrayImage render_frame(const DomainSpec& d, const Pose4& rel, int variant, std::mt19937_64& rng) {
  GrayImage img(kImageWidth, kImageHeight);
  // Background: ramp plus a few random-phase plane waves.
  const double phase1 = uniform(rng, 0, 2 * kPi), phase2 = uniform(rng, 0, 2 * kPi);
  const double ang1 = uniform(rng, 0, kPi), ang2 = uniform(rng, 0, kPi);
  const double k = 2 * kPi / d.texture_scale_px;
  const double shade = variant == 0 ? 0.0 : d.subject_variation * (variant % 2 == 1 ? 1.0 : -1.0) * ((variant + 1) / 2);
  const double body = std::clamp(d.subject_level + shade, 0.0, 1.0);

  const double u0 = d.cx - d.focal_px * rel.y / rel.x;
  const double v0 = d.cy - d.focal_px * rel.z / rel.x;
  const double a = d.focal_px * d.subject_half_width_m / rel.x;
  const double b = d.focal_px * d.subject_half_height_m / rel.x;
  const double facing = 0.5 * (1.0 - std::cos(rel.yaw));  // 1 when facing the camera
  const double mu = u0 - 0.6 * a * std::sin(rel.yaw);
  const double mv = v0 - 0.45 * b;
  const double mr = 0.35 * a;
  const double mark = body + (d.mark_level - body) * facing;

  std::normal_distribution<double> n01(0.0, 1.0);
  const double rmax2 = d.cx * d.cx + d.cy * d.cy;
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      double v = d.background_level + d.background_gradient * (y / (img.height - 1.0) - 0.5) +
                 0.5 * d.texture_amplitude *
                     (std::sin(k * (x * std::cos(ang1) + y * std::sin(ang1)) + phase1) +
                      std::sin(1.7 * k * (x * std::cos(ang2) + y * std::sin(ang2)) + phase2));
      const double ex = (x - u0) / a, ey = (y - v0) / b;
      if (ex * ex + ey * ey <= 1.0) {
        v = body;
        const double mx = x - mu, my = y - mv;
        if (mx * mx + my * my <= mr * mr) v = mark;
      }
      if (d.vignette > 0) {
        const double r2 = ((x - d.cx) * (x - d.cx) + (y - d.cy) * (y - d.cy)) / rmax2;
        v *= 1.0 - d.vignette * r2;
      }
      if (d.noise_sigma > 0) v += d.noise_sigma * n01(rng);
      img.at(x, y) = to_byte(v);
    }
  }
  return img;
}

SynthData synth_generate(const SynthConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  SynthData out;
  std::mt19937_64 rng(seed);

  // Domain A: independent relative poses, drone at the origin.
  {
    std::mt19937_64 pose_rng(rng());
    std::mt19937_64 pix_rng(rng());
    auto& seq = out.domain_a;
    for (int k = 0; k < cfg.pretrain_samples; ++k) {
      const Pose4 rel = draw_relative(cfg.range, pose_rng);
      const int variant = static_cast<int>(pose_rng() % 3);
      FlightRecord r;
      r.timestamp = k * kStep;
      r.image = frame_name(k);
      r.drone = Pose4::identity();
      r.subject = rel;
      r.subject_id = "a" + std::to_string(variant);
      seq.images.push_back(render_frame(cfg.a, rel, variant, pix_rng));
      seq.records.push_back(std::move(r));
    }
  }

  // Domain B: one flight per subject. The subject alternates still and
  // walking phases in the world; the relative pose drifts as a bounded
  // mean-reverting process; the drone pose follows from both.
  const int steps = static_cast<int>(std::lround(cfg.flight_seconds * kNominalRateHz));
  const double rho = std::exp(-kStep / cfg.relative_time_constant_s);
  const double innov = std::sqrt(1.0 - rho * rho);
  const double x_mid = 0.5 * (cfg.range.x_min + cfg.range.x_max);
  const double x_sd = (cfg.range.x_max - cfg.range.x_min) / 4.0;
  for (int s = 0; s < cfg.subjects; ++s) {
    std::mt19937_64 motion(rng());
    std::mt19937_64 pix_rng(rng());
    std::normal_distribution<double> n01(0.0, 1.0);
    Sequence seq;
    double hx = 0, hy = 0, hyaw = uniform(motion, -kPi, kPi);
    double ox = n01(motion), ob = n01(motion), oz = n01(motion);
    double phi = uniform(motion, -kPi, kPi);
    bool walking = false;
    int phase_left = static_cast<int>(uniform(motion, cfg.still_min_s, cfg.still_max_s) * kNominalRateHz);
    double heading = 0, speed = 0;
    std::vector<Pose4> drone_truth;
    for (int k = 0; k < steps; ++k) {
      if (phase_left-- <= 0) {
        walking = !walking;
        const double lo = walking ? cfg.move_min_s : cfg.still_min_s;
        const double hi = walking ? cfg.move_max_s : cfg.still_max_s;
        phase_left = static_cast<int>(uniform(motion, lo, hi) * kNominalRateHz) - 1;
        heading = uniform(motion, -kPi, kPi);
        speed = uniform(motion, cfg.walk_speed_min, cfg.walk_speed_max);
      }
      if (walking && k > 0) {
        hx += speed * kStep * std::cos(heading);
        hy += speed * kStep * std::sin(heading);
        hyaw = wrap_angle(hyaw + 0.3 * wrap_angle(heading - hyaw));
      }
      ox = rho * ox + innov * n01(motion);
      ob = rho * ob + innov * n01(motion);
      oz = rho * oz + innov * n01(motion);
      phi = wrap_angle(phi + cfg.yaw_step_sigma * n01(motion));
      const double rx = std::clamp(x_mid + x_sd * ox, cfg.range.x_min, cfg.range.x_max);
      const double rb = std::clamp(0.5 * cfg.range.bearing_max * ob, -cfg.range.bearing_max, cfg.range.bearing_max);
      const double rz = std::clamp(0.5 * cfg.range.z_max * oz, -cfg.range.z_max, cfg.range.z_max);
      const Pose4 rel{rx, rx * rb, rz, phi};
      const Pose4 subject{hx, hy, 0.0, hyaw};
      const Pose4 drone = compose(subject, invert(rel));

      FlightRecord r;
      r.timestamp = k * kStep;
      r.image = frame_name(k);
      r.drone = drone;
      r.subject = subject;
      r.subject_id = "b" + std::to_string(s);
      seq.images.push_back(render_frame(cfg.b, rel, s, pix_rng));
      seq.records.push_back(std::move(r));
      drone_truth.push_back(drone);
    }
    OdomNoiseParams np = cfg.odometry;
    np.seed = cfg.odometry.seed + 1000003ULL * static_cast<std::uint64_t>(s + 1) + seed;
    const auto est = simulate_odometry(drone_truth, np);
    for (int k = 0; k < steps; ++k) seq.records[static_cast<std::size_t>(k)].odometry = est[static_cast<std::size_t>(k)];
    out.domain_b.push_back(std::move(seq));
  }
  return out;
}

}  // namespace odl
