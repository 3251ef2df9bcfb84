#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "odl/image.hpp"
#include "odl/losses.hpp"
#include "odl/pose.hpp"

namespace odl {

inline constexpr double kNominalRateHz = 4.0;

struct FlightRecord {
  double timestamp = 0.0;  ///< seconds
  std::string image;       ///< path relative to the sequence directory
  Pose4 drone;             ///< world frame
  Pose4 subject;           ///< world frame
  std::string subject_id;
  std::optional<Pose4> odometry;  ///< cached drone estimate, world frame

  /// Subject pose in the drone frame.
  Pose4 relative() const { return compose(invert(drone), subject); }

  friend bool operator==(const FlightRecord&, const FlightRecord&) = default;
};

/// Records plus decoded frames, in time order.
struct Sequence {
  std::vector<FlightRecord> records;
  std::vector<GrayImage> images;

  std::size_t size() const { return records.size(); }
  /// 1 / median timestep; the nominal rate for fewer than two records.
  double rate_hz() const;
  std::vector<Pose4> drone_poses() const;
  std::vector<Pose4> subject_poses() const;
  std::vector<Pose4> relative_poses() const;
  /// Cached estimates; empty unless every record carries one.
  std::vector<Pose4> odometry_poses() const;
};

/// Layout: `<dir>/index.csv` with one row per record
///   timestamp,image,drone_x,drone_y,drone_z,drone_yaw,subject_x,subject_y,subject_z,subject_yaw,subject_id
/// optionally followed by odom_x,odom_y,odom_z,odom_yaw. Lines starting with
/// '#' and the header row are skipped. Images are binary PGM files.
/// Throws IngestionError (with the row number) on malformed rows, missing
/// images and non-increasing timestamps.
Sequence load_sequence(const std::string& dir);
void write_sequence(const std::string& dir, const Sequence& seq);

struct FinetuneSetSpec {
  double segment_s = 128.0;
  double rate_hz = 4.0;
  int max_samples = 512;
  int gap_samples = 100;       ///< excluded from the test set on each side
  double max_fraction = 0.75;  ///< of the subject's samples

  void validate(double sequence_rate = kNominalRateHz) const;
};

struct Acquisition {
  int segment_start = 0;  ///< first sequence index of the segment
  int segment_length = 0;
  std::vector<int> finetune;  ///< ascending sequence indices
  std::vector<int> test;      ///< ascending sequence indices
};

/// Throws AcquisitionError when the sequence cannot hold the segment plus
/// gaps and a nonempty test set; ConfigError on an invalid spec.
Acquisition acquire_finetune_set(const Sequence& seq, const FinetuneSetSpec& spec, std::uint64_t seed);

struct AugmentedSample {
  GrayImage image;
  Pose4 label;
};

/// Photometric ops keep the label; a horizontal flip mirrors y and yaw.
AugmentedSample augment(const GrayImage& image, const Pose4& label, const AugmentParams& params, std::uint64_t seed);

/// Swaps the roles of i and j and inverts both relative poses.
ConsistencyPair time_reverse(const ConsistencyPair& pair);

/// Mirrors a pair's relative poses to match horizontally flipped frames.
ConsistencyPair mirror_pair(const ConsistencyPair& pair);

/// Index k is still when the translation speed of the subject over each of
/// the steps covering the preceding t_min seconds is <= v_max. Returns a
/// sorted index list.
std::vector<int> detect_still(const Sequence& seq, double v_max = 0.1, double t_min = 1.0);
std::vector<int> detect_still(const std::vector<Pose4>& subject, double rate_hz, double v_max = 0.1,
                              double t_min = 1.0);

/// Per index: id of the contiguous still run it belongs to, -1 when moving.
std::vector<int> still_runs(const std::vector<int>& still, std::size_t length);

}  // namespace odl
