#include "odl/cost_model.hpp"

#include <cmath>

#include "odl/error.hpp"

namespace odl {

std::uint64_t forward_macs(const ArchDescriptor& arch) {
  if (arch.layers.empty()) return 0;
  const auto shapes = arch.shapes();
  std::uint64_t macs = 0;
  for (std::size_t i = 0; i < arch.layers.size(); ++i) {
    const Shape3& is = shapes[i];
    const Shape3& os = shapes[i + 1];
    if (const auto* c = std::get_if<Conv2D>(&arch.layers[i])) {
      macs += os.elements() * static_cast<std::uint64_t>(c->kernel * c->kernel) * is.channels;
    } else if (std::get_if<FullyConnected>(&arch.layers[i])) {
      macs += is.elements() * os.elements();
    }
  }
  return macs;
}

std::uint64_t backward_macs(const ArchDescriptor& arch, const UpdateStrategy& strategy) {
  if (arch.layers.empty()) return 0;
  const auto shapes = arch.shapes();
  // Bn mode changes what is stored, not the arithmetic.
  const BackwardPlan plan = make_backward_plan(arch, strategy, BnStats::batch);
  if (plan.earliest < 0) return 0;
  std::uint64_t macs = 0;
  for (std::size_t i = static_cast<std::size_t>(plan.earliest); i < arch.layers.size(); ++i) {
    const int li = static_cast<int>(i);
    const Shape3& is = shapes[i];
    const Shape3& os = shapes[i + 1];
    const auto& spec = arch.layers[i];
    if (const auto* c = std::get_if<Conv2D>(&spec)) {
      const std::uint64_t k2 = static_cast<std::uint64_t>(c->kernel) * c->kernel;
      if (strategy.selects(arch, li, Role::conv_weight)) macs += os.elements() * k2 * is.channels;
      if (c->bias && strategy.selects(arch, li, Role::conv_bias)) macs += os.elements();
      if (plan.grad_input[i]) macs += is.elements() * k2 * os.channels;
    } else if (std::get_if<BatchNorm>(&spec)) {
      if (strategy.selects(arch, li, Role::bn_gamma)) macs += is.elements();
      if (strategy.selects(arch, li, Role::bn_beta)) macs += is.elements();
      if (plan.grad_input[i]) macs += is.elements();
    } else if (std::get_if<FullyConnected>(&spec)) {
      const std::uint64_t mn = is.elements() * os.elements();
      if (strategy.selects(arch, li, Role::fc_weight)) macs += mn;
      if (strategy.selects(arch, li, Role::fc_bias)) macs += os.elements();
      if (plan.grad_input[i]) macs += mn;
    }
  }
  return macs;
}

std::uint64_t train_step_macs(const ArchDescriptor& arch, const UpdateStrategy& strategy) {
  return forward_macs(arch) + backward_macs(arch, strategy);
}

Footprint activation_footprint(const ArchDescriptor& arch, const UpdateStrategy& strategy, BnStats bn_stats) {
  Footprint fp;
  if (arch.layers.empty()) return fp;
  const auto shapes = arch.shapes();
  const BackwardPlan plan = make_backward_plan(arch, strategy, resolve_bn_stats(bn_stats, arch, strategy));
  for (std::size_t i = 0; i < arch.layers.size(); ++i) {
    const Shape3& is = shapes[i];
    const Shape3& os = shapes[i + 1];
    if (plan.retain_input[i]) fp.activation_elements += is.elements();
    if (plan.retain_xhat[i]) fp.activation_elements += is.elements();
    if (plan.retain_inv_std[i]) fp.stat_elements += static_cast<std::uint64_t>(is.channels);
    if (plan.retain_mask[i]) {
      // relu: one flag per input element; pool: one argmax per output element
      fp.mask_bytes += kind_of(arch.layers[i]) == LayerKind::max_pool ? os.elements() : is.elements();
    }
  }
  return fp;
}

std::uint64_t activation_bytes(const ArchDescriptor& arch, const UpdateStrategy& strategy,
                               std::size_t bytes_per_element, BnStats bn_stats) {
  return activation_footprint(arch, strategy, bn_stats).activation_elements * bytes_per_element;
}

void SocProfile::validate() const {
  if (!(frequency_hz > 0) || !(effective_mac_per_cycle > 0) || !(emulation_multiplier > 0) ||
      !(peak_mac_per_cycle_fwd > 0) || !(peak_mac_per_cycle_bwd > 0)) {
    throw ConfigError("SoC profile '" + name + "': all rates must be positive");
  }
}

namespace {

std::uint64_t reference_all_wb_macs() {
  static const std::uint64_t macs = train_step_macs(reference_descriptor(), UpdateStrategy::all_wb());
  return macs;
}

}  // namespace

SocProfile gap9_profile() {
  SocProfile p{"GAP9", 370e6, 5.3, 4.6, 0.0, 1.0};
  p.effective_mac_per_cycle = calibrate_mac_per_cycle(reference_all_wb_macs(), 512, 5, 123.0, p.frequency_hz, 1.0);
  return p;
}

SocProfile gap8_profile() {
  SocProfile p{"GAP8", 175e6, 5.3, 4.6, 0.0, 10.0};
  p.effective_mac_per_cycle =
      calibrate_mac_per_cycle(reference_all_wb_macs(), 512, 5, 86.0 * 60.0 + 51.0, p.frequency_hz, p.emulation_multiplier);
  return p;
}

double estimate_time(std::uint64_t macs_per_frame, std::size_t set_size, int epochs, const SocProfile& soc) {
  soc.validate();
  const double total = static_cast<double>(macs_per_frame) * static_cast<double>(set_size) * epochs;
  return total / (soc.effective_mac_per_cycle * soc.frequency_hz) * soc.emulation_multiplier;
}

double calibrate_mac_per_cycle(std::uint64_t macs_per_frame, std::size_t set_size, int epochs, double seconds,
                               double frequency_hz, double emulation_multiplier) {
  if (!(seconds > 0) || !(frequency_hz > 0)) throw ConfigError("calibration needs positive time and frequency");
  const double total = static_cast<double>(macs_per_frame) * static_cast<double>(set_size) * epochs;
  return total * emulation_multiplier / (seconds * frequency_hz);
}

CostReport cost_report(const ArchDescriptor& arch, const UpdateStrategy& strategy, BnStats bn_stats) {
  CostReport r;
  r.strategy = strategy.name();
  r.params_selected = arch.layers.empty() ? 0 : count_selected_params(arch, strategy);
  r.params_total = arch.layers.empty() ? 0 : count_learnable_params(arch);
  r.params_percent = r.params_total ? 100.0 * static_cast<double>(r.params_selected) / r.params_total : 0.0;
  r.footprint = activation_footprint(arch, strategy, bn_stats);
  r.activation_bytes = r.footprint.activation_elements * 4;
  r.forward_macs = forward_macs(arch);
  r.train_step_macs = r.forward_macs + backward_macs(arch, strategy);
  return r;
}

double batch_memory_fraction(double per_frame, int batch, double memory_bytes) {
  return per_frame * batch / memory_bytes;
}

}  // namespace odl
