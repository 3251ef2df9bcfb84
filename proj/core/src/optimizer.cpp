#include "odl/optimizer.hpp"

#include <cmath>

#include "odl/error.hpp"

namespace odl {

void AdamConfig::validate() const {
  if (!(lr >= 0.0) || !std::isfinite(lr)) throw ConfigError("learning rate must be finite and >= 0");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
    throw ConfigError("Adam moment coefficients must lie in [0, 1)");
  }
  if (!(eps > 0.0)) throw ConfigError("Adam epsilon must be positive");
}

void adam_step(ModelParams<float>& params, const GradientStore<float>& grads, std::span<const ParamKey> selected,
               AdamState& state, const AdamConfig& config) {
  for (const auto& key : selected) {
    const auto g = grads.find(key);
    if (g == grads.end()) throw ShapeError("missing gradient for " + to_string(key));
    if (g->second.size() != params.at(key).size()) throw ShapeError("gradient size mismatch for " + to_string(key));
  }
  ++state.step;
  const double bc1 = 1.0 - std::pow(config.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(config.beta2, static_cast<double>(state.step));
  for (const auto& key : selected) {
    auto p = params.at(key);
    const auto& g = grads.at(key);
    auto& mom = state.moments[key];
    if (mom.m.size() != p.size()) {
      mom.m.assign(p.size(), 0.0);
      mom.v.assign(p.size(), 0.0);
    }
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double gi = g[i];
      mom.m[i] = config.beta1 * mom.m[i] + (1.0 - config.beta1) * gi;
      mom.v[i] = config.beta2 * mom.v[i] + (1.0 - config.beta2) * gi * gi;
      const double mhat = mom.m[i] / bc1;
      const double vhat = mom.v[i] / bc2;
      if (config.lr != 0.0) p[i] = static_cast<float>(p[i] - config.lr * mhat / (std::sqrt(vhat) + config.eps));
    }
  }
}

}  // namespace odl
