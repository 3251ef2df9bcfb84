#pragma once

#include <array>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "odl/pose.hpp"

namespace odl {

struct MaeResult {
  double mean = 0.0;  ///< per-component mean absolute error (sum / 4)
  double sum = 0.0;   ///< mean over samples of the summed L1 error
  std::array<double, 4> per_output{};
};

/// Yaw differences are wrapped. Throws ContractViolation on empty or
/// mismatched inputs.
MaeResult mae(std::span<const Pose4> predictions, std::span<const Pose4> targets);

struct R2Result {
  std::array<double, 4> per_output{};  ///< percent; NaN where undefined
  std::array<bool, 4> defined{};       ///< false when the target variance is zero
  double mean = 0.0;                   ///< over defined outputs, percent
};

/// 100 * (1 - SS_res / SS_tot) per output. Yaw residuals are wrapped and
/// the yaw spread is taken around the circular mean of the targets.
R2Result r2(std::span<const Pose4> predictions, std::span<const Pose4> targets);

struct MeanCi {
  double mean = 0.0;
  double half_width = 0.0;  ///< 95% Student-t; 0 for fewer than two values
  std::size_t n = 0;
};

MeanCi mean_ci95(std::span<const double> values);
double median(std::vector<double> values);

struct R2Cell {
  std::string finetune_subject;
  std::string test_subject;
  R2Result r2;
};

/// CSV rows `finetune_subject,test_subject,output,r2` with outputs x, y, z,
/// yaw and mean.
void write_r2_matrix(std::ostream& out, std::span<const R2Cell> cells);

}  // namespace odl
