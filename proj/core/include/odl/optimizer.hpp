#pragma once

#include <map>
#include <span>
#include <vector>

#include "odl/network.hpp"
#include "odl/params.hpp"

namespace odl {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  void validate() const;
};

struct AdamMoments {
  std::vector<double> m;
  std::vector<double> v;
};

struct AdamState {
  long step = 0;
  std::map<ParamKey, AdamMoments> moments;
};

/// One bias-corrected Adam step on the tensors named in `selected`. Every
/// selected key must have a gradient of the tensor's size (ShapeError
/// otherwise); gradients for other keys are ignored and those tensors are
/// never written.
void adam_step(ModelParams<float>& params, const GradientStore<float>& grads, std::span<const ParamKey> selected,
               AdamState& state, const AdamConfig& config);

}  // namespace odl
