#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "odl/arch.hpp"
#include "odl/network.hpp"
#include "odl/strategy.hpp"

namespace odl {

/// MAC conventions:
///  - conv forward and weight gradient: out_elems * k^2 * in_ch;
///  - conv input gradient: transposed conv evaluated at input resolution,
///    in_elems * k^2 * out_ch (stride-dilated output gradient);
///  - fc forward, weight gradient and input gradient: in * out;
///  - bn backward: one pseudo-MAC per element for each of input gradient,
///    gamma gradient and beta gradient; conv/fc bias gradients one per
///    output element;
///  - relu, max-pool and flatten are free.
std::uint64_t forward_macs(const ArchDescriptor& arch);
std::uint64_t backward_macs(const ArchDescriptor& arch, const UpdateStrategy& strategy);
std::uint64_t train_step_macs(const ArchDescriptor& arch, const UpdateStrategy& strategy);

/// What a train-mode forward retains, per frame (masks, activations) and per
/// batch (bn statistics).
struct Footprint {
  std::uint64_t activation_elements = 0;  ///< float tensors per frame
  std::uint64_t mask_bytes = 0;           ///< relu masks + pool indices per frame
  std::uint64_t stat_elements = 0;        ///< bn inverse std per batch
};

Footprint activation_footprint(const ArchDescriptor& arch, const UpdateStrategy& strategy,
                               BnStats bn_stats = BnStats::automatic);

/// Bytes of retained float activations per frame.
std::uint64_t activation_bytes(const ArchDescriptor& arch, const UpdateStrategy& strategy,
                               std::size_t bytes_per_element = 4, BnStats bn_stats = BnStats::automatic);

struct SocProfile {
  std::string name;
  double frequency_hz = 0.0;
  double peak_mac_per_cycle_fwd = 0.0;
  double peak_mac_per_cycle_bwd = 0.0;
  double effective_mac_per_cycle = 0.0;  ///< calibrated end-to-end rate
  double emulation_multiplier = 1.0;     ///< 1 for a hardware FPU

  void validate() const;
};

/// GAP9 @ 370 MHz, hardware FPU; effective rate calibrated on the
/// all(w+b) / 512 samples / 5 epochs = 123 s measurement.
SocProfile gap9_profile();
/// GAP8 @ 175 MHz, soft-float (10x); effective rate calibrated on the
/// all(w+b) / 512 samples / 5 epochs = 86:51 measurement.
SocProfile gap8_profile();

/// epochs * set_size * macs / (effective MAC/cycle * f) * emulation.
double estimate_time(std::uint64_t macs_per_frame, std::size_t set_size, int epochs, const SocProfile& soc);

/// Effective MAC/cycle that makes estimate_time() reproduce `seconds`.
double calibrate_mac_per_cycle(std::uint64_t macs_per_frame, std::size_t set_size, int epochs, double seconds,
                               double frequency_hz, double emulation_multiplier);

struct CostReport {
  std::string strategy;
  std::size_t params_selected = 0;
  std::size_t params_total = 0;
  double params_percent = 0.0;
  Footprint footprint;
  std::uint64_t activation_bytes = 0;  ///< at 4 bytes per element
  std::uint64_t forward_macs = 0;
  std::uint64_t train_step_macs = 0;
};

CostReport cost_report(const ArchDescriptor& arch, const UpdateStrategy& strategy,
                       BnStats bn_stats = BnStats::automatic);

/// Fraction of a memory of `memory_bytes` taken by `batch` frames whose
/// activations take `per_frame` units each.
double batch_memory_fraction(double per_frame, int batch, double memory_bytes);

}  // namespace odl
