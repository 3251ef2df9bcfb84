#include "odl/network.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "odl/error.hpp"

namespace odl {

const char* to_string(BnStats s) {
  switch (s) {
    case BnStats::automatic: return "auto";
    case BnStats::batch: return "batch";
    case BnStats::frozen: return "frozen";
  }
  return "?";
}

BnStats bn_stats_from_string(const std::string& s) {
  if (s == "auto") return BnStats::automatic;
  if (s == "batch") return BnStats::batch;
  if (s == "frozen") return BnStats::frozen;
  throw ConfigError("bn_stats must be auto, batch or frozen (got '" + s + "')");
}

BnStats resolve_bn_stats(BnStats requested, const ArchDescriptor& arch, const UpdateStrategy& strategy) {
  if (requested != BnStats::automatic) return requested;
  for (const auto& key : strategy.selected_keys(arch)) {
    if (key.role == Role::conv_weight || key.role == Role::bn_gamma) return BnStats::batch;
  }
  return BnStats::frozen;
}

BackwardPlan make_backward_plan(const ArchDescriptor& arch, const UpdateStrategy& strategy, BnStats resolved) {
  const std::size_t L = arch.layers.size();
  BackwardPlan plan;
  plan.selected = strategy.selected_keys(arch);
  plan.bn_batch = resolved != BnStats::frozen;
  plan.grad_input.assign(L, false);
  plan.retain_input.assign(L, false);
  plan.retain_xhat.assign(L, false);
  plan.retain_inv_std.assign(L, false);
  plan.retain_mask.assign(L, false);
  if (plan.selected.empty()) return plan;
  plan.earliest = plan.selected.front().layer;
  for (const auto& k : plan.selected) plan.earliest = std::min(plan.earliest, k.layer);

  auto sel = [&](int layer, Role r) { return strategy.selects(arch, layer, r); };
  for (std::size_t i = 0; i < L; ++i) {
    const int li = static_cast<int>(i);
    plan.grad_input[i] = li > plan.earliest;
    switch (kind_of(arch.layers[i])) {
      case LayerKind::conv: plan.retain_input[i] = sel(li, Role::conv_weight); break;
      case LayerKind::fully_connected: plan.retain_input[i] = sel(li, Role::fc_weight); break;
      case LayerKind::batch_norm:
        plan.retain_xhat[i] = sel(li, Role::bn_gamma) || (plan.grad_input[i] && plan.bn_batch);
        plan.retain_inv_std[i] = plan.grad_input[i] && plan.bn_batch;
        break;
      case LayerKind::relu:
      case LayerKind::max_pool: plan.retain_mask[i] = plan.grad_input[i]; break;
      case LayerKind::flatten: break;
    }
  }
  return plan;
}

template <typename Real>
std::size_t ActivationCache<Real>::activation_elements() const {
  std::size_t n = 0;
  for (const auto& t : inputs) n += t.size();
  for (const auto& t : xhat) n += t.size();
  return n;
}

template <typename Real>
std::size_t ActivationCache<Real>::mask_bytes() const {
  std::size_t n = 0;
  for (const auto& t : masks) n += t.size();
  return n;
}

template <typename Real>
std::size_t ActivationCache<Real>::stat_elements() const {
  std::size_t n = 0;
  for (const auto& t : inv_std) n += t.size();
  return n;
}

namespace {

struct Range {
  int lo;
  int hi;  // inclusive; lo > hi means empty
};

// Output positions o with 0 <= o*stride - pad + k < in.
Range valid_range(int out, int in, int stride, int pad, int k) {
  const int t = pad - k;
  const int lo = t <= 0 ? 0 : (t + stride - 1) / stride;
  const int u = in - 1 + pad - k;
  if (u < 0) return {0, -1};
  return {lo, std::min(out - 1, u / stride)};
}

template <typename Real>
std::vector<Real> conv_forward(const std::vector<Real>& in, int batch, const Shape3& is, const Shape3& os,
                               const Conv2D& c, std::span<const Real> weight, std::span<const Real> bias) {
  std::vector<Real> out(static_cast<std::size_t>(batch) * os.elements());
  std::vector<double> acc(static_cast<std::size_t>(os.height) * os.width);
  const int k = c.kernel, s = c.stride, p = c.padding;
  for (int n = 0; n < batch; ++n) {
    const Real* xin = in.data() + static_cast<std::size_t>(n) * is.elements();
    for (int o = 0; o < os.channels; ++o) {
      std::fill(acc.begin(), acc.end(), bias.empty() ? 0.0 : static_cast<double>(bias[o]));
      for (int ci = 0; ci < is.channels; ++ci) {
        const Real* plane = xin + static_cast<std::size_t>(ci) * is.height * is.width;
        for (int ky = 0; ky < k; ++ky) {
          const Range ry = valid_range(os.height, is.height, s, p, ky);
          for (int kx = 0; kx < k; ++kx) {
            const Range rx = valid_range(os.width, is.width, s, p, kx);
            const double w = weight[((static_cast<std::size_t>(o) * is.channels + ci) * k + ky) * k + kx];
            for (int oy = ry.lo; oy <= ry.hi; ++oy) {
              const Real* row = plane + static_cast<std::size_t>(oy * s - p + ky) * is.width;
              double* arow = acc.data() + static_cast<std::size_t>(oy) * os.width;
              for (int ox = rx.lo; ox <= rx.hi; ++ox) arow[ox] += w * static_cast<double>(row[ox * s - p + kx]);
            }
          }
        }
      }
      Real* dst = out.data() + static_cast<std::size_t>(n) * os.elements() + static_cast<std::size_t>(o) * acc.size();
      for (std::size_t i = 0; i < acc.size(); ++i) dst[i] = static_cast<Real>(acc[i]);
    }
  }
  return out;
}

template <typename Real>
std::vector<Real> conv_backward_input(const std::vector<Real>& grad, int batch, const Shape3& is, const Shape3& os,
                                      const Conv2D& c, std::span<const Real> weight) {
  std::vector<Real> gin(static_cast<std::size_t>(batch) * is.elements());
  std::vector<double> acc(static_cast<std::size_t>(is.height) * is.width);
  const int k = c.kernel, s = c.stride, p = c.padding;
  for (int n = 0; n < batch; ++n) {
    const Real* g = grad.data() + static_cast<std::size_t>(n) * os.elements();
    for (int ci = 0; ci < is.channels; ++ci) {
      std::fill(acc.begin(), acc.end(), 0.0);
      for (int o = 0; o < os.channels; ++o) {
        const Real* gplane = g + static_cast<std::size_t>(o) * os.height * os.width;
        for (int ky = 0; ky < k; ++ky) {
          const Range ry = valid_range(os.height, is.height, s, p, ky);
          for (int kx = 0; kx < k; ++kx) {
            const Range rx = valid_range(os.width, is.width, s, p, kx);
            const double w = weight[((static_cast<std::size_t>(o) * is.channels + ci) * k + ky) * k + kx];
            for (int oy = ry.lo; oy <= ry.hi; ++oy) {
              const Real* grow = gplane + static_cast<std::size_t>(oy) * os.width;
              double* arow = acc.data() + static_cast<std::size_t>(oy * s - p + ky) * is.width;
              for (int ox = rx.lo; ox <= rx.hi; ++ox) arow[ox * s - p + kx] += w * static_cast<double>(grow[ox]);
            }
          }
        }
      }
      Real* dst = gin.data() + static_cast<std::size_t>(n) * is.elements() + static_cast<std::size_t>(ci) * acc.size();
      for (std::size_t i = 0; i < acc.size(); ++i) dst[i] = static_cast<Real>(acc[i]);
    }
  }
  return gin;
}

template <typename Real>
std::vector<Real> conv_backward_weight(const std::vector<Real>& grad, const std::vector<Real>& in, int batch,
                                       const Shape3& is, const Shape3& os, const Conv2D& c) {
  const int k = c.kernel, s = c.stride, p = c.padding;
  std::vector<Real> gw(static_cast<std::size_t>(os.channels) * is.channels * k * k);
  for (int o = 0; o < os.channels; ++o) {
    for (int ci = 0; ci < is.channels; ++ci) {
      for (int ky = 0; ky < k; ++ky) {
        const Range ry = valid_range(os.height, is.height, s, p, ky);
        for (int kx = 0; kx < k; ++kx) {
          const Range rx = valid_range(os.width, is.width, s, p, kx);
          double sum = 0.0;
          for (int n = 0; n < batch; ++n) {
            const Real* gplane =
                grad.data() + static_cast<std::size_t>(n) * os.elements() + static_cast<std::size_t>(o) * os.height * os.width;
            const Real* plane =
                in.data() + static_cast<std::size_t>(n) * is.elements() + static_cast<std::size_t>(ci) * is.height * is.width;
            for (int oy = ry.lo; oy <= ry.hi; ++oy) {
              const Real* grow = gplane + static_cast<std::size_t>(oy) * os.width;
              const Real* row = plane + static_cast<std::size_t>(oy * s - p + ky) * is.width;
              for (int ox = rx.lo; ox <= rx.hi; ++ox) {
                sum += static_cast<double>(grow[ox]) * static_cast<double>(row[ox * s - p + kx]);
              }
            }
          }
          gw[((static_cast<std::size_t>(o) * is.channels + ci) * k + ky) * k + kx] = static_cast<Real>(sum);
        }
      }
    }
  }
  return gw;
}

// Sum over batch and spatial positions, per channel.
template <typename Real>
std::vector<Real> channel_sums(const std::vector<Real>& grad, int batch, const Shape3& sh) {
  std::vector<Real> out(sh.channels);
  const std::size_t hw = static_cast<std::size_t>(sh.height) * sh.width;
  for (int c = 0; c < sh.channels; ++c) {
    double sum = 0.0;
    for (int n = 0; n < batch; ++n) {
      const Real* g = grad.data() + static_cast<std::size_t>(n) * sh.elements() + c * hw;
      for (std::size_t i = 0; i < hw; ++i) sum += static_cast<double>(g[i]);
    }
    out[c] = static_cast<Real>(sum);
  }
  return out;
}

template <typename Real>
void check_running_var(const ModelParams<Real>& params, int layer) {
  for (Real v : params.at({layer, Role::bn_running_var})) {
    if (!(v > Real(0)) || !std::isfinite(static_cast<double>(v))) {
      throw ParameterCorruption("layer " + std::to_string(layer) + ": non-positive running variance");
    }
  }
}

}  // namespace

template <typename Real>
ForwardResult<Real> forward(const ModelParams<Real>& params, const ArchDescriptor& arch, const Tensor4<Real>& batch,
                            Mode mode, const UpdateStrategy& strategy, BnStats bn_stats) {
  arch.validate();
  const auto shapes = arch.shapes();
  if (batch.n <= 0) throw ShapeError("empty batch");
  if (batch.shape != arch.input || batch.data.size() != static_cast<std::size_t>(batch.n) * arch.input.elements()) {
    throw ShapeError("input batch shape does not match the descriptor input " + std::to_string(arch.input.channels) +
                     "x" + std::to_string(arch.input.height) + "x" + std::to_string(arch.input.width));
  }

  const int B = batch.n;
  const std::size_t L = arch.layers.size();
  ForwardResult<Real> result;
  const bool train = mode == Mode::train;
  const BnStats resolved = train ? resolve_bn_stats(bn_stats, arch, strategy) : BnStats::frozen;
  BackwardPlan plan;
  if (train) {
    plan = make_backward_plan(arch, strategy, resolved);
    auto& cache = result.cache;
    cache.valid = true;
    cache.batch = B;
    cache.bn_stats = resolved;
    cache.selected = plan.selected;
    cache.inputs.resize(L);
    cache.xhat.resize(L);
    cache.inv_std.resize(L);
    cache.masks.resize(L);
  }

  std::vector<Real> cur = batch.data;
  for (std::size_t i = 0; i < L; ++i) {
    const int li = static_cast<int>(i);
    const Shape3& is = shapes[i];
    const Shape3& os = shapes[i + 1];
    if (train && plan.retain_input[i]) result.cache.inputs[i] = cur;
    const auto& spec = arch.layers[i];

    if (const auto* c = std::get_if<Conv2D>(&spec)) {
      std::span<const Real> bias;
      if (c->bias) bias = params.at({li, Role::conv_bias});
      cur = conv_forward(cur, B, is, os, *c, params.at({li, Role::conv_weight}), bias);
    } else if (std::get_if<BatchNorm>(&spec)) {
      check_running_var(params, li);
      const auto gamma = params.at({li, Role::bn_gamma});
      const auto beta = params.at({li, Role::bn_beta});
      const auto rmean = params.at({li, Role::bn_running_mean});
      const auto rvar = params.at({li, Role::bn_running_var});
      const std::size_t hw = static_cast<std::size_t>(is.height) * is.width;
      const double count = static_cast<double>(B) * static_cast<double>(hw);
      const bool use_batch = train && resolved == BnStats::batch;
      const bool keep_xhat = train && plan.retain_xhat[i];
      if (keep_xhat) result.cache.xhat[i].resize(cur.size());
      if (train && plan.retain_inv_std[i]) result.cache.inv_std[i].resize(is.channels);
      BnBatchStats stats;
      stats.layer = li;
      if (use_batch) {
        stats.mean.resize(is.channels);
        stats.var.resize(is.channels);
      }
      for (int ch = 0; ch < is.channels; ++ch) {
        double mean = 0.0;
        double var = 0.0;
        if (use_batch) {
          for (int n = 0; n < B; ++n) {
            const Real* x = cur.data() + static_cast<std::size_t>(n) * is.elements() + ch * hw;
            for (std::size_t j = 0; j < hw; ++j) mean += static_cast<double>(x[j]);
          }
          mean /= count;
          for (int n = 0; n < B; ++n) {
            const Real* x = cur.data() + static_cast<std::size_t>(n) * is.elements() + ch * hw;
            for (std::size_t j = 0; j < hw; ++j) {
              const double d = static_cast<double>(x[j]) - mean;
              var += d * d;
            }
          }
          var /= count;
          stats.mean[ch] = mean;
          stats.var[ch] = count > 1.0 ? var * count / (count - 1.0) : var;
        } else {
          mean = static_cast<double>(rmean[ch]);
          var = static_cast<double>(rvar[ch]);
        }
        const double inv_std = 1.0 / std::sqrt(var + kBatchNormEpsilon);
        if (train && plan.retain_inv_std[i]) result.cache.inv_std[i][ch] = static_cast<Real>(inv_std);
        const double g = static_cast<double>(gamma[ch]);
        const double b = static_cast<double>(beta[ch]);
        for (int n = 0; n < B; ++n) {
          const std::size_t off = static_cast<std::size_t>(n) * is.elements() + ch * hw;
          Real* x = cur.data() + off;
          for (std::size_t j = 0; j < hw; ++j) {
            const double xh = (static_cast<double>(x[j]) - mean) * inv_std;
            if (keep_xhat) result.cache.xhat[i][off + j] = static_cast<Real>(xh);
            x[j] = static_cast<Real>(g * xh + b);
          }
        }
      }
      if (use_batch) result.bn_batch_stats.push_back(std::move(stats));
    } else if (std::get_if<ReLU>(&spec)) {
      const bool keep = train && plan.retain_mask[i];
      if (keep) result.cache.masks[i].resize(cur.size());
      for (std::size_t j = 0; j < cur.size(); ++j) {
        const bool on = cur[j] > Real(0);
        if (keep) result.cache.masks[i][j] = on ? 1 : 0;
        if (!on) cur[j] = Real(0);
      }
    } else if (const auto* mp = std::get_if<MaxPool>(&spec)) {
      const bool keep = train && plan.retain_mask[i];
      std::vector<Real> out(static_cast<std::size_t>(B) * os.elements());
      if (keep) result.cache.masks[i].resize(out.size());
      for (int n = 0; n < B; ++n) {
        for (int ch = 0; ch < is.channels; ++ch) {
          const Real* plane = cur.data() + static_cast<std::size_t>(n) * is.elements() +
                              static_cast<std::size_t>(ch) * is.height * is.width;
          const std::size_t obase =
              static_cast<std::size_t>(n) * os.elements() + static_cast<std::size_t>(ch) * os.height * os.width;
          for (int oy = 0; oy < os.height; ++oy) {
            for (int ox = 0; ox < os.width; ++ox) {
              int best = 0;
              Real bv = plane[static_cast<std::size_t>(oy * mp->stride) * is.width + ox * mp->stride];
              for (int ky = 0; ky < mp->kernel; ++ky) {
                for (int kx = 0; kx < mp->kernel; ++kx) {
                  const Real v = plane[static_cast<std::size_t>(oy * mp->stride + ky) * is.width + ox * mp->stride + kx];
                  if (v > bv) {
                    bv = v;
                    best = ky * mp->kernel + kx;
                  }
                }
              }
              const std::size_t oi = obase + static_cast<std::size_t>(oy) * os.width + ox;
              out[oi] = bv;
              if (keep) result.cache.masks[i][oi] = static_cast<std::uint8_t>(best);
            }
          }
        }
      }
      cur = std::move(out);
    } else if (std::get_if<Flatten>(&spec)) {
      // layout already contiguous per sample
    } else if (const auto* fc = std::get_if<FullyConnected>(&spec)) {
      const auto w = params.at({li, Role::fc_weight});
      const auto b = params.at({li, Role::fc_bias});
      const int in_f = static_cast<int>(is.elements());
      std::vector<Real> out(static_cast<std::size_t>(B) * fc->out_features);
      for (int n = 0; n < B; ++n) {
        const Real* x = cur.data() + static_cast<std::size_t>(n) * in_f;
        for (int o = 0; o < fc->out_features; ++o) {
          double sum = static_cast<double>(b[o]);
          const Real* wr = w.data() + static_cast<std::size_t>(o) * in_f;
          for (int j = 0; j < in_f; ++j) sum += static_cast<double>(wr[j]) * static_cast<double>(x[j]);
          out[static_cast<std::size_t>(n) * fc->out_features + o] = static_cast<Real>(sum);
        }
      }
      cur = std::move(out);
    }
  }

  result.outputs.resize(B);
  result.predictions.resize(B);
  for (int n = 0; n < B; ++n) {
    for (int k = 0; k < 4; ++k) result.outputs[n][k] = static_cast<double>(cur[static_cast<std::size_t>(n) * 4 + k]);
    result.predictions[n] = Pose4::from_array(result.outputs[n]);
  }
  return result;
}

template <typename Real>
GradientStore<Real> backward(const ModelParams<Real>& params, const ArchDescriptor& arch,
                             const ActivationCache<Real>& cache, std::span<const std::array<double, 4>> upstream,
                             const UpdateStrategy& strategy) {
  if (!cache.valid) throw ContractViolation("backward requires a cache from a train-mode forward");
  const BackwardPlan plan = make_backward_plan(arch, strategy, cache.bn_stats);
  if (plan.selected != cache.selected) {
    throw ContractViolation("cache was produced for a different update strategy than '" + strategy.name() + "'");
  }
  const int B = cache.batch;
  if (upstream.size() != static_cast<std::size_t>(B)) {
    throw ContractViolation("upstream gradient has " + std::to_string(upstream.size()) + " rows, batch is " +
                            std::to_string(B));
  }
  GradientStore<Real> grads;
  if (plan.earliest < 0) return grads;

  const auto shapes = arch.shapes();
  std::vector<Real> g(static_cast<std::size_t>(B) * 4);
  for (int n = 0; n < B; ++n) {
    for (int k = 0; k < 4; ++k) g[static_cast<std::size_t>(n) * 4 + k] = static_cast<Real>(upstream[n][k]);
  }
  auto sel = [&](int layer, Role r) { return strategy.selects(arch, layer, r); };

  for (int li = static_cast<int>(arch.layers.size()) - 1; li >= plan.earliest; --li) {
    const std::size_t i = static_cast<std::size_t>(li);
    const Shape3& is = shapes[i];
    const Shape3& os = shapes[i + 1];
    const bool need_in = plan.grad_input[i];
    const auto& spec = arch.layers[i];

    if (const auto* c = std::get_if<Conv2D>(&spec)) {
      if (sel(li, Role::conv_weight)) {
        grads[{li, Role::conv_weight}] = conv_backward_weight(g, cache.inputs[i], B, is, os, *c);
      }
      if (c->bias && sel(li, Role::conv_bias)) grads[{li, Role::conv_bias}] = channel_sums(g, B, os);
      if (need_in) g = conv_backward_input(g, B, is, os, *c, params.at({li, Role::conv_weight}));
    } else if (std::get_if<BatchNorm>(&spec)) {
      const std::size_t hw = static_cast<std::size_t>(is.height) * is.width;
      const double count = static_cast<double>(B) * static_cast<double>(hw);
      const auto gamma = params.at({li, Role::bn_gamma});
      const auto rvar = params.at({li, Role::bn_running_var});
      const auto& xhat = cache.xhat[i];
      std::vector<double> sum_g(is.channels, 0.0), sum_gx(is.channels, 0.0);
      for (int ch = 0; ch < is.channels; ++ch) {
        for (int n = 0; n < B; ++n) {
          const std::size_t off = static_cast<std::size_t>(n) * is.elements() + ch * hw;
          for (std::size_t j = 0; j < hw; ++j) {
            sum_g[ch] += static_cast<double>(g[off + j]);
            if (!xhat.empty()) sum_gx[ch] += static_cast<double>(g[off + j]) * static_cast<double>(xhat[off + j]);
          }
        }
      }
      if (sel(li, Role::bn_gamma)) {
        auto& t = grads[{li, Role::bn_gamma}];
        t.resize(is.channels);
        for (int ch = 0; ch < is.channels; ++ch) t[ch] = static_cast<Real>(sum_gx[ch]);
      }
      if (sel(li, Role::bn_beta)) {
        auto& t = grads[{li, Role::bn_beta}];
        t.resize(is.channels);
        for (int ch = 0; ch < is.channels; ++ch) t[ch] = static_cast<Real>(sum_g[ch]);
      }
      if (need_in) {
        for (int ch = 0; ch < is.channels; ++ch) {
          const double gam = static_cast<double>(gamma[ch]);
          if (plan.bn_batch) {
            const double inv_std = static_cast<double>(cache.inv_std[i][ch]);
            const double mg = sum_g[ch] / count;
            const double mgx = sum_gx[ch] / count;
            for (int n = 0; n < B; ++n) {
              const std::size_t off = static_cast<std::size_t>(n) * is.elements() + ch * hw;
              for (std::size_t j = 0; j < hw; ++j) {
                const double v = gam * inv_std *
                                 (static_cast<double>(g[off + j]) - mg - static_cast<double>(xhat[off + j]) * mgx);
                g[off + j] = static_cast<Real>(v);
              }
            }
          } else {
            const double scale = gam / std::sqrt(static_cast<double>(rvar[ch]) + kBatchNormEpsilon);
            for (int n = 0; n < B; ++n) {
              const std::size_t off = static_cast<std::size_t>(n) * is.elements() + ch * hw;
              for (std::size_t j = 0; j < hw; ++j) g[off + j] = static_cast<Real>(scale * static_cast<double>(g[off + j]));
            }
          }
        }
      }
    } else if (std::get_if<ReLU>(&spec)) {
      if (need_in) {
        const auto& m = cache.masks[i];
        for (std::size_t j = 0; j < g.size(); ++j) {
          if (!m[j]) g[j] = Real(0);
        }
      }
    } else if (const auto* mp = std::get_if<MaxPool>(&spec)) {
      if (need_in) {
        const auto& m = cache.masks[i];
        std::vector<Real> gin(static_cast<std::size_t>(B) * is.elements(), Real(0));
        for (int n = 0; n < B; ++n) {
          for (int ch = 0; ch < is.channels; ++ch) {
            const std::size_t ibase =
                static_cast<std::size_t>(n) * is.elements() + static_cast<std::size_t>(ch) * is.height * is.width;
            const std::size_t obase =
                static_cast<std::size_t>(n) * os.elements() + static_cast<std::size_t>(ch) * os.height * os.width;
            for (int oy = 0; oy < os.height; ++oy) {
              for (int ox = 0; ox < os.width; ++ox) {
                const std::size_t oi = obase + static_cast<std::size_t>(oy) * os.width + ox;
                const int ky = m[oi] / mp->kernel;
                const int kx = m[oi] % mp->kernel;
                gin[ibase + static_cast<std::size_t>(oy * mp->stride + ky) * is.width + ox * mp->stride + kx] += g[oi];
              }
            }
          }
        }
        g = std::move(gin);
      }
    } else if (std::get_if<Flatten>(&spec)) {
      // no-op
    } else if (const auto* fc = std::get_if<FullyConnected>(&spec)) {
      const int in_f = static_cast<int>(is.elements());
      const int out_f = fc->out_features;
      if (sel(li, Role::fc_weight)) {
        const auto& x = cache.inputs[i];
        auto& t = grads[{li, Role::fc_weight}];
        t.resize(static_cast<std::size_t>(out_f) * in_f);
        for (int o = 0; o < out_f; ++o) {
          for (int j = 0; j < in_f; ++j) {
            double sum = 0.0;
            for (int n = 0; n < B; ++n) {
              sum += static_cast<double>(g[static_cast<std::size_t>(n) * out_f + o]) *
                     static_cast<double>(x[static_cast<std::size_t>(n) * in_f + j]);
            }
            t[static_cast<std::size_t>(o) * in_f + j] = static_cast<Real>(sum);
          }
        }
      }
      if (sel(li, Role::fc_bias)) {
        auto& t = grads[{li, Role::fc_bias}];
        t.resize(out_f);
        for (int o = 0; o < out_f; ++o) {
          double sum = 0.0;
          for (int n = 0; n < B; ++n) sum += static_cast<double>(g[static_cast<std::size_t>(n) * out_f + o]);
          t[o] = static_cast<Real>(sum);
        }
      }
      if (need_in) {
        const auto w = params.at({li, Role::fc_weight});
        std::vector<Real> gin(static_cast<std::size_t>(B) * in_f);
        for (int n = 0; n < B; ++n) {
          for (int j = 0; j < in_f; ++j) {
            double sum = 0.0;
            for (int o = 0; o < out_f; ++o) {
              sum += static_cast<double>(w[static_cast<std::size_t>(o) * in_f + j]) *
                     static_cast<double>(g[static_cast<std::size_t>(n) * out_f + o]);
            }
            gin[static_cast<std::size_t>(n) * in_f + j] = static_cast<Real>(sum);
          }
        }
        g = std::move(gin);
      }
    }
  }
  return grads;
}

void apply_running_stats(ModelParams<float>& params, const std::vector<BnBatchStats>& stats, double momentum) {
  for (const auto& s : stats) {
    auto rm = params.at({s.layer, Role::bn_running_mean});
    auto rv = params.at({s.layer, Role::bn_running_var});
    for (std::size_t c = 0; c < rm.size(); ++c) {
      rm[c] = static_cast<float>((1.0 - momentum) * rm[c] + momentum * s.mean[c]);
      rv[c] = static_cast<float>((1.0 - momentum) * rv[c] + momentum * s.var[c]);
    }
  }
}

template struct ActivationCache<float>;
template struct ActivationCache<double>;
template ForwardResult<float> forward(const ModelParams<float>&, const ArchDescriptor&, const Tensor4<float>&, Mode,
                                      const UpdateStrategy&, BnStats);
template ForwardResult<double> forward(const ModelParams<double>&, const ArchDescriptor&, const Tensor4<double>&,
                                       Mode, const UpdateStrategy&, BnStats);
template GradientStore<float> backward(const ModelParams<float>&, const ArchDescriptor&, const ActivationCache<float>&,
                                       std::span<const std::array<double, 4>>, const UpdateStrategy&);
template GradientStore<double> backward(const ModelParams<double>&, const ArchDescriptor&,
                                        const ActivationCache<double>&, std::span<const std::array<double, 4>>,
                                        const UpdateStrategy&);

}  // namespace odl
