#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "odl/pose.hpp"

namespace odl {

/// Gradient of a scalar loss w.r.t. one 4DOF prediction.
using PoseGrad = std::array<double, 4>;

struct TaskSample {
  int index = 0;  ///< sequence timestep
  Pose4 target;   ///< subject pose in the drone frame
  bool in_task_set = true;
};

struct ConsistencyPair {
  int i = 0;
  int j = 0;
  Pose4 odometry;        ///< drone pose at j in the drone frame at i
  Pose4 subject_motion;  ///< subject pose at j in the subject frame at i (identity when unknown)
  bool in_sc_set = true;
};

enum class SampleSet { all, still_subset, empty };
enum class DroneMode { absolute, odometry, noisy_odometry };  // D, dD, dD~
enum class SubjectMode { absolute, odometry, unknown };      // H, dH, H?

/// Which side of the consistency chain the subject motion is compared with.
/// `chain` compares the composed chain with the pose of the subject at j in
/// the subject frame at i, so ground-truth predictions give zero loss.
enum class TargetConvention { chain, inverse };

/// Parsed from labels such as `t(a)`, `sc(a,dD~,H?)` or
/// `t(s32)+sc(s128,dD~,H?)`.
struct LossScenario {
  std::string label;
  SampleSet task_set = SampleSet::empty;
  int task_subset_size = 0;
  DroneMode task_drone = DroneMode::absolute;  ///< odometry used to propagate still-subset labels
  SampleSet sc_set = SampleSet::empty;
  int sc_subset_size = 0;
  DroneMode sc_drone = DroneMode::odometry;
  SubjectMode sc_subject = SubjectMode::odometry;
  double dt = 2.0;
  double lambda_sc = 1.0;
  TargetConvention convention = TargetConvention::chain;

  bool has_task() const { return task_set != SampleSet::empty; }
  bool has_sc() const { return sc_set != SampleSet::empty; }

  /// Throws ConfigError if malformed or if both terms are empty.
  static LossScenario parse(const std::string& label, double dt = 2.0, double lambda_sc = 1.0);
};

/// mean_i delta(prediction_i, target_i). Throws UndefinedTermError when empty.
double task_loss(std::span<const Pose4> predictions, std::span<const Pose4> targets);

struct TaskLossGrad {
  double value = 0.0;
  std::vector<PoseGrad> grad;
};
TaskLossGrad task_loss_grad(std::span<const Pose4> predictions, std::span<const Pose4> targets);

/// Target at j for a subject that stayed still since i:
/// compose(invert(odometry_ij), known_i).
Pose4 propagate_target(const Pose4& known, const Pose4& odometry);

/// delta(invert(pred_i) * odom_ij * pred_j, subject_motion).
double sc_loss(const Pose4& pred_i, const Pose4& pred_j, const Pose4& odom_ij, const Pose4& subject_motion,
               TargetConvention convention = TargetConvention::chain);

struct ScLossGrad {
  double value = 0.0;
  PoseGrad grad_i{};
  PoseGrad grad_j{};
};
ScLossGrad sc_loss_grad(const Pose4& pred_i, const Pose4& pred_j, const Pose4& odom_ij, const Pose4& subject_motion,
                        TargetConvention convention = TargetConvention::chain);

struct TaskTerm {
  Pose4 prediction;
  Pose4 target;
};

struct PairTerm {
  Pose4 pred_i;
  Pose4 pred_j;
  Pose4 odometry;
  Pose4 subject_motion;
};

struct CombinedLoss {
  double value = 0.0;
  double task = 0.0;
  double sc = 0.0;
  bool has_task = false;
  bool has_sc = false;
  std::vector<PoseGrad> task_grad;    ///< per task term
  std::vector<PoseGrad> pair_grad_i;  ///< per pair term
  std::vector<PoseGrad> pair_grad_j;
};

/// L = L_task + lambda_sc * L_sc, omitting an empty term. Both empty throws
/// ConfigError. L1 kinks take subgradient 0.
CombinedLoss combined_loss(const LossScenario& scenario, std::span<const TaskTerm> tasks,
                           std::span<const PairTerm> pairs);

/// Inputs for pair construction over an acquired, uniformly sampled frame list.
struct PairSource {
  double rate_hz = 4.0;            ///< sampling rate of `frames`
  std::vector<int> frames;         ///< sequence indices, ascending, spaced 1/rate_hz
  std::span<const Pose4> drone;    ///< true drone world poses (whole sequence)
  std::span<const Pose4> drone_estimate;  ///< odometry estimates (whole sequence), may be empty
  std::span<const Pose4> subject;  ///< true subject world poses (whole sequence)
  std::vector<int> still_run;      ///< per sequence index: still-run id, -1 when moving; may be empty
};

/// Pairs (k, k + dt * rate) over `frames` restricted to the scenario's sc set.
/// dt must be a multiple of the sampling period (ConfigError otherwise); dt
/// longer than the list yields no pairs. Still-subset selection draws up to
/// `sc_subset_size` pairs whose endpoints lie in one still run.
std::vector<ConsistencyPair> build_pairs(const PairSource& source, double dt, const LossScenario& scenario,
                                         std::uint64_t seed);

}  // namespace odl
