#include "odl/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "odl/error.hpp"

namespace fs = std::filesystem;

namespace odl {

namespace {

const char* const kHeader =
    "timestamp,image,drone_x,drone_y,drone_z,drone_yaw,subject_x,subject_y,subject_z,subject_yaw,subject_id";
const char* const kOdomHeader = ",odom_x,odom_y,odom_z,odom_yaw";

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

double parse_number(const std::string& field, std::size_t row, const char* what) {
  double v = 0.0;
  const char* b = field.data();
  const char* e = b + field.size();
  auto [ptr, ec] = std::from_chars(b, e, v);
  if (ec != std::errc() || ptr != e || !std::isfinite(v)) {
    throw IngestionError("index row " + std::to_string(row) + ": bad " + what + " '" + field + "'");
  }
  return v;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

Pose4 pose_from_fields(const std::vector<std::string>& f, std::size_t at, std::size_t row, const char* what) {
  // Yaw is stored verbatim; wrapping happens in relative().
  return Pose4{parse_number(f[at], row, what), parse_number(f[at + 1], row, what),
               parse_number(f[at + 2], row, what), parse_number(f[at + 3], row, what)};
}

}  // namespace

double Sequence::rate_hz() const {
  if (records.size() < 2) return kNominalRateHz;
  std::vector<double> dts;
  dts.reserve(records.size() - 1);
  for (std::size_t k = 1; k < records.size(); ++k) dts.push_back(records[k].timestamp - records[k - 1].timestamp);
  std::nth_element(dts.begin(), dts.begin() + static_cast<std::ptrdiff_t>(dts.size() / 2), dts.end());
  return 1.0 / dts[dts.size() / 2];
}

std::vector<Pose4> Sequence::drone_poses() const {
  std::vector<Pose4> out;
  out.reserve(records.size());
  for (const auto& r : records) out.push_back(r.drone);
  return out;
}

std::vector<Pose4> Sequence::subject_poses() const {
  std::vector<Pose4> out;
  out.reserve(records.size());
  for (const auto& r : records) out.push_back(r.subject);
  return out;
}

std::vector<Pose4> Sequence::relative_poses() const {
  std::vector<Pose4> out;
  out.reserve(records.size());
  for (const auto& r : records) out.push_back(r.relative());
  return out;
}

std::vector<Pose4> Sequence::odometry_poses() const {
  std::vector<Pose4> out;
  for (const auto& r : records) {
    if (!r.odometry) return {};
    out.push_back(*r.odometry);
  }
  return out;
}

Sequence load_sequence(const std::string& dir) {
  const fs::path index = fs::path(dir) / "index.csv";
  std::ifstream in(index);
  if (!in) throw IngestionError("cannot open '" + index.string() + "'");
  Sequence seq;
  std::string line;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty() || line[0] == '#' || line.rfind("timestamp,", 0) == 0) continue;
    const auto f = split_csv(line);
    if (f.size() != 11 && f.size() != 15) {
      throw IngestionError("index row " + std::to_string(row) + ": expected 11 or 15 fields, got " +
                           std::to_string(f.size()));
    }
    FlightRecord r;
    r.timestamp = parse_number(f[0], row, "timestamp");
    r.image = f[1];
    if (r.image.empty()) throw IngestionError("index row " + std::to_string(row) + ": empty image path");
    r.drone = pose_from_fields(f, 2, row, "drone pose");
    r.subject = pose_from_fields(f, 6, row, "subject pose");
    r.subject_id = f[10];
    if (f.size() == 15) r.odometry = pose_from_fields(f, 11, row, "odometry pose");
    if (!seq.records.empty() && !(r.timestamp > seq.records.back().timestamp)) {
      throw IngestionError("index row " + std::to_string(row) + ": timestamp " + fmt(r.timestamp) +
                           " is not after the previous one");
    }
    const fs::path img = fs::path(dir) / r.image;
    if (!fs::exists(img)) throw IngestionError("index row " + std::to_string(row) + ": missing image " + img.string());
    GrayImage image = read_pgm(img.string());
    if (image.width != kImageWidth || image.height != kImageHeight) {
      throw IngestionError("index row " + std::to_string(row) + ": image must be " + std::to_string(kImageWidth) +
                           "x" + std::to_string(kImageHeight));
    }
    seq.images.push_back(std::move(image));
    seq.records.push_back(std::move(r));
  }
  return seq;
}

void write_sequence(const std::string& dir, const Sequence& seq) {
  if (seq.images.size() != seq.records.size()) throw ContractViolation("sequence images/records size mismatch");
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw RunError("cannot create '" + dir + "': " + ec.message());
  const bool odom = !seq.records.empty() && std::all_of(seq.records.begin(), seq.records.end(),
                                                        [](const auto& r) { return r.odometry.has_value(); });
  std::ofstream out(fs::path(dir) / "index.csv");
  if (!out) throw RunError("cannot write index in '" + dir + "'");
  out << kHeader << (odom ? kOdomHeader : "") << '\n';
  for (std::size_t k = 0; k < seq.records.size(); ++k) {
    const auto& r = seq.records[k];
    if (r.image.find(',') != std::string::npos || r.subject_id.find(',') != std::string::npos) {
      throw ContractViolation("image paths and subject ids may not contain commas");
    }
    out << fmt(r.timestamp) << ',' << r.image;
    for (const Pose4* p : {&r.drone, &r.subject}) {
      out << ',' << fmt(p->x) << ',' << fmt(p->y) << ',' << fmt(p->z) << ',' << fmt(p->yaw);
    }
    out << ',' << r.subject_id;
    if (odom) {
      const Pose4& o = *r.odometry;
      out << ',' << fmt(o.x) << ',' << fmt(o.y) << ',' << fmt(o.z) << ',' << fmt(o.yaw);
    }
    out << '\n';
    const fs::path img = fs::path(dir) / r.image;
    fs::create_directories(img.parent_path(), ec);
    write_pgm(img.string(), seq.images[k]);
  }
  if (!out) throw RunError("short write on index in '" + dir + "'");
}

void FinetuneSetSpec::validate(double sequence_rate) const {
  if (!(segment_s > 0) || !(rate_hz > 0) || max_samples < 1) {
    throw ConfigError("fine-tune set: duration, rate and max samples must be positive");
  }
  const double stride = sequence_rate / rate_hz;
  if (std::abs(stride - std::round(stride)) > 1e-9 || std::round(stride) < 1) {
    throw ConfigError("fine-tune rate " + fmt(rate_hz) + " Hz must divide the sequence rate " + fmt(sequence_rate) +
                      " Hz");
  }
  if (gap_samples < 0) throw ConfigError("gap must be >= 0");
  if (!(max_fraction > 0 && max_fraction <= 1)) throw ConfigError("max fine-tune fraction must lie in (0, 1]");
}

Acquisition acquire_finetune_set(const Sequence& seq, const FinetuneSetSpec& spec, std::uint64_t seed) {
  const double seq_rate = kNominalRateHz;
  spec.validate(seq_rate);
  const int n = static_cast<int>(seq.size());
  const int seg = static_cast<int>(std::lround(spec.segment_s * seq_rate));
  const int stride = static_cast<int>(std::lround(seq_rate / spec.rate_hz));
  if (n < seg + 2 * spec.gap_samples + 1) {
    throw AcquisitionError("sequence of " + std::to_string(n) + " samples cannot hold a " + std::to_string(seg) +
                           "-sample segment with " + std::to_string(spec.gap_samples) + "-sample gaps");
  }
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> pick(0, n - seg);
  Acquisition a;
  a.segment_start = pick(rng);
  a.segment_length = seg;
  const int cap = std::min(spec.max_samples, static_cast<int>(std::floor(spec.max_fraction * n)));
  for (int k = a.segment_start; k < a.segment_start + seg && static_cast<int>(a.finetune.size()) < cap; k += stride) {
    a.finetune.push_back(k);
  }
  const int lo = a.segment_start - spec.gap_samples;
  const int hi = a.segment_start + seg + spec.gap_samples;
  for (int k = 0; k < n; ++k) {
    if (k < lo || k >= hi) a.test.push_back(k);
  }
  return a;
}

AugmentedSample augment(const GrayImage& image, const Pose4& label, const AugmentParams& params, std::uint64_t seed) {
  auto a = augment_image(image, params, seed);
  return {std::move(a.image), a.flipped ? mirror_y(label) : label};
}

ConsistencyPair time_reverse(const ConsistencyPair& pair) {
  ConsistencyPair r = pair;
  std::swap(r.i, r.j);
  r.odometry = invert(pair.odometry);
  r.subject_motion = invert(pair.subject_motion);
  return r;
}

ConsistencyPair mirror_pair(const ConsistencyPair& pair) {
  ConsistencyPair r = pair;
  r.odometry = mirror_y(pair.odometry);
  r.subject_motion = mirror_y(pair.subject_motion);
  return r;
}

std::vector<int> detect_still(const std::vector<Pose4>& subject, double rate_hz, double v_max, double t_min) {
  std::vector<int> out;
  const int window = std::max(1, static_cast<int>(std::lround(t_min * rate_hz)));
  int run = 0;  // consecutive slow steps ending at k
  for (std::size_t k = 1; k < subject.size(); ++k) {
    const double dx = subject[k].x - subject[k - 1].x;
    const double dy = subject[k].y - subject[k - 1].y;
    const double dz = subject[k].z - subject[k - 1].z;
    const double speed = std::sqrt(dx * dx + dy * dy + dz * dz) * rate_hz;
    run = speed <= v_max ? run + 1 : 0;
    if (run >= window) out.push_back(static_cast<int>(k));
  }
  return out;
}

std::vector<int> detect_still(const Sequence& seq, double v_max, double t_min) {
  return detect_still(seq.subject_poses(), seq.rate_hz(), v_max, t_min);
}

std::vector<int> still_runs(const std::vector<int>& still, std::size_t length) {
  std::vector<int> runs(length, -1);
  int id = -1;
  int prev = -2;
  for (int k : still) {
    if (k < 0 || static_cast<std::size_t>(k) >= length) continue;
    if (k != prev + 1) ++id;
    runs[static_cast<std::size_t>(k)] = id;
    prev = k;
  }
  return runs;
}

}  // namespace odl
