#pragma once

// Central finite-difference checks of the analytic network gradients, in
// double precision, on small random descriptors.

#include <algorithm>
#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "odl/network.hpp"

namespace odl::testkit {

inline ArchDescriptor random_descriptor(std::mt19937_64& rng) {
  auto pick = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
  ArchDescriptor a;
  a.input = {pick(1, 2), pick(6, 9), pick(6, 10)};
  Shape3 cur = a.input;
  const int blocks = pick(1, 2);
  for (int b = 0; b < blocks; ++b) {
    const int k = pick(0, 1) ? 3 : 1;
    const int stride = (cur.height >= 6 && pick(0, 1)) ? 2 : 1;
    const int pad = k == 3 ? pick(0, 1) : 0;
    const bool bn = pick(0, 3) != 0;
    const int ch = pick(2, 3);
    a.layers.emplace_back(Conv2D{ch, k, stride, pad, !bn || pick(0, 1) == 1});
    if (bn) a.layers.emplace_back(BatchNorm{ch});
    a.layers.emplace_back(ReLU{});
    cur = a.shapes().back();
    if (cur.height >= 4 && cur.width >= 4 && pick(0, 1)) a.layers.emplace_back(MaxPool{2, 2});
    cur = a.shapes().back();
  }
  a.layers.emplace_back(Flatten{});
  if (pick(0, 1)) {
    a.layers.emplace_back(FullyConnected{pick(3, 5)});
    a.layers.emplace_back(ReLU{});
  }
  a.layers.emplace_back(FullyConnected{4});
  a.validate();
  return a;
}

inline ModelParams<double> random_params(const ArchDescriptor& arch, std::mt19937_64& rng) {
  ModelParams<double> p(arch);
  std::uniform_real_distribution<double> u(-0.8, 0.8);
  std::uniform_real_distribution<double> pos(0.5, 1.5);
  for (auto& [key, t] : p.tensors()) {
    for (auto& v : t.values) {
      switch (key.role) {
        case Role::bn_gamma:
        case Role::bn_running_var: v = pos(rng); break;
        default: v = u(rng); break;
      }
    }
  }
  return p;
}

struct GradCheckStats {
  int checked = 0;
  int skipped = 0;  ///< perturbation crossed a relu / max-pool kink
  double worst_rel = 0.0;
  std::string worst_where;
};

/// Compares backward() with central differences of sum <u, output> for every
/// selected tensor, up to `per_tensor` elements each.
inline GradCheckStats check_gradients(const ArchDescriptor& arch, const UpdateStrategy& strategy, BnStats bn,
                                      std::mt19937_64& rng, int batch = 3, int per_tensor = 10, double eps = 1e-3) {
  auto params = random_params(arch, rng);
  Tensor4<double> x;
  x.n = batch;
  x.shape = arch.input;
  x.data.resize(static_cast<std::size_t>(batch) * arch.input.elements());
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  for (auto& v : x.data) v = u01(rng);
  std::vector<std::array<double, 4>> up(static_cast<std::size_t>(batch));
  std::normal_distribution<double> n01(0.0, 1.0);
  for (auto& r : up) {
    for (auto& v : r) v = n01(rng);
  }

  auto objective = [&](const ModelParams<double>& p) {
    auto r = forward(p, arch, x, Mode::train, strategy, bn);
    double s = 0.0;
    for (std::size_t n = 0; n < r.outputs.size(); ++n) {
      for (int c = 0; c < 4; ++c) s += up[n][c] * r.outputs[n][c];
    }
    return s;
  };

  const auto base = forward(params, arch, x, Mode::train, strategy, bn);
  const auto grads = backward(params, arch, base.cache, up, strategy);
  GradCheckStats st;
  for (const auto& [key, g] : grads) {
    auto values = params.at(key);
    std::vector<std::size_t> idx(values.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    std::shuffle(idx.begin(), idx.end(), rng);
    idx.resize(std::min<std::size_t>(idx.size(), static_cast<std::size_t>(per_tensor)));
    for (std::size_t i : idx) {
      auto fd = [&](double h) {
        auto p = params;
        p.at(key)[i] += h;
        const double fp = objective(p);
        p.at(key)[i] -= 2 * h;
        const double fm = objective(p);
        return (fp - fm) / (2 * h);
      };
      const double num = fd(eps);
      const double num_half = fd(eps / 2);
      const double ana = g[i];
      const double scale = std::max({std::abs(ana), std::abs(num), 1e-5});
      // A kink inside the stencil makes the two step sizes disagree.
      if (std::abs(num - num_half) / scale > 1e-5) {
        ++st.skipped;
        continue;
      }
      ++st.checked;
      const double rel = std::abs(ana - num) / scale;
      if (rel > st.worst_rel) {
        st.worst_rel = rel;
        st.worst_where = to_string(key) + "[" + std::to_string(i) + "]";
      }
    }
  }
  return st;
}

}  // namespace odl::testkit
