#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <vector>

#include "odl/arch.hpp"
#include "odl/params.hpp"
#include "odl/pose.hpp"
#include "odl/strategy.hpp"

namespace odl {

enum class Mode { train, eval };

/// Normalisation statistics used by BatchNorm in train mode.
/// `batch` normalises with batch statistics and reports running-stat updates;
/// `frozen` normalises with the stored running statistics.
/// `automatic` resolves to `batch` when the strategy trains conv weights or
/// bn gamma (the normalised activations must be kept anyway), else `frozen`.
enum class BnStats { automatic, batch, frozen };

const char* to_string(BnStats s);
BnStats bn_stats_from_string(const std::string& s);
BnStats resolve_bn_stats(BnStats requested, const ArchDescriptor& arch, const UpdateStrategy& strategy);

inline constexpr double kBatchNormEpsilon = 1e-5;

/// Which tensors a train-mode forward must keep so that backward can produce
/// gradients for exactly the selected parameters.
struct BackwardPlan {
  std::vector<ParamKey> selected;
  int earliest = -1;  ///< first layer holding a selected parameter, -1 if none
  bool bn_batch = true;
  std::vector<bool> grad_input;      ///< propagate dL/d(input) through layer
  std::vector<bool> retain_input;    ///< conv / fc input for weight gradients
  std::vector<bool> retain_xhat;     ///< bn normalised input
  std::vector<bool> retain_inv_std;  ///< bn per-channel batch inverse std
  std::vector<bool> retain_mask;     ///< relu sign mask / pool argmax
};

BackwardPlan make_backward_plan(const ArchDescriptor& arch, const UpdateStrategy& strategy, BnStats resolved);

/// Batch of images in NCHW order.
template <typename Real>
struct Tensor4 {
  int n = 0;
  Shape3 shape;
  std::vector<Real> data;
};

/// Tensors retained by a train-mode forward pass. Float tensors (layer inputs,
/// normalised bn inputs) count as activations; relu masks and pool argmax
/// indices are one byte per element; bn inverse std is one value per channel
/// per batch.
template <typename Real>
struct ActivationCache {
  bool valid = false;
  int batch = 0;
  BnStats bn_stats = BnStats::batch;
  std::vector<ParamKey> selected;
  std::vector<std::vector<Real>> inputs;
  std::vector<std::vector<Real>> xhat;
  std::vector<std::vector<Real>> inv_std;
  std::vector<std::vector<std::uint8_t>> masks;

  std::size_t activation_elements() const;
  std::size_t activation_bytes() const { return activation_elements() * sizeof(Real); }
  std::size_t mask_bytes() const;
  std::size_t stat_elements() const;
};

struct BnBatchStats {
  int layer = 0;
  std::vector<double> mean;
  std::vector<double> var;  ///< unbiased
};

template <typename Real>
struct ForwardResult {
  std::vector<std::array<double, 4>> outputs;  ///< raw network outputs
  std::vector<Pose4> predictions;              ///< outputs with yaw wrapped
  ActivationCache<Real> cache;
  std::vector<BnBatchStats> bn_batch_stats;  ///< empty unless train mode with batch stats
};

/// Runs the network on `batch`. Input pixels are expected in [0, 1].
/// Throws ShapeError on descriptor/input mismatch and ParameterCorruption on
/// non-positive running variance.
template <typename Real>
ForwardResult<Real> forward(const ModelParams<Real>& params, const ArchDescriptor& arch, const Tensor4<Real>& batch,
                            Mode mode, const UpdateStrategy& strategy, BnStats bn_stats = BnStats::automatic);

template <typename Real>
using GradientStore = std::map<ParamKey, std::vector<Real>>;

/// Gradients of sum_n <upstream[n], output[n]> for the selected parameters.
/// Input gradients are propagated only down to the earliest selected layer.
/// Throws ContractViolation when the cache was produced for another strategy
/// or by an eval-mode forward.
template <typename Real>
GradientStore<Real> backward(const ModelParams<Real>& params, const ArchDescriptor& arch,
                             const ActivationCache<Real>& cache, std::span<const std::array<double, 4>> upstream,
                             const UpdateStrategy& strategy);

/// running = (1 - momentum) * running + momentum * batch.
void apply_running_stats(ModelParams<float>& params, const std::vector<BnBatchStats>& stats, double momentum);

extern template ForwardResult<float> forward(const ModelParams<float>&, const ArchDescriptor&, const Tensor4<float>&,
                                             Mode, const UpdateStrategy&, BnStats);
extern template ForwardResult<double> forward(const ModelParams<double>&, const ArchDescriptor&,
                                              const Tensor4<double>&, Mode, const UpdateStrategy&, BnStats);
extern template GradientStore<float> backward(const ModelParams<float>&, const ArchDescriptor&,
                                              const ActivationCache<float>&, std::span<const std::array<double, 4>>,
                                              const UpdateStrategy&);
extern template GradientStore<double> backward(const ModelParams<double>&, const ArchDescriptor&,
                                               const ActivationCache<double>&, std::span<const std::array<double, 4>>,
                                               const UpdateStrategy&);

}  // namespace odl
