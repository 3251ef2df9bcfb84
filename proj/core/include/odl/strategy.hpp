#pragma once

#include <string>
#include <vector>

#include "odl/arch.hpp"
#include "odl/params.hpp"

namespace odl {

enum class LayerSelector { all, conv, batch_norm, last_fc };

struct StrategyRule {
  LayerSelector layers = LayerSelector::all;
  std::vector<Role> roles;
};

/// Predicate over (layer, role) selecting the trainable subset. Presets can
/// be joined with `+`, e.g. `all(b)+fc(w+b)`.
class UpdateStrategy {
 public:
  UpdateStrategy() = default;
  UpdateStrategy(std::string name, std::vector<StrategyRule> rules) : name_(std::move(name)), rules_(std::move(rules)) {}

  /// Every weight and bias.
  static UpdateStrategy all_wb();
  /// Last fully-connected layer only.
  static UpdateStrategy fc_wb();
  /// Batch-norm gamma and beta.
  static UpdateStrategy bn_wb();
  /// conv_bias, bn_beta and fc_bias.
  static UpdateStrategy bias_only();
  static UpdateStrategy none();

  /// Accepts `all(w+b)`, `fc(w+b)`, `bn(w+b)`, `all(b)`, `conv(w)`, ...
  /// joined with `+`, plus the aliases AllWB, FcWB, BnWB, BiasOnly.
  static UpdateStrategy parse(const std::string& label);

  bool selects(const ArchDescriptor& arch, int layer, Role role) const;
  bool empty() const { return rules_.empty(); }
  const std::string& name() const { return name_; }

  /// Selected learnable tensors of `arch`, ordered by (layer, role).
  std::vector<ParamKey> selected_keys(const ArchDescriptor& arch) const;

  friend UpdateStrategy operator+(const UpdateStrategy& a, const UpdateStrategy& b);

 private:
  std::string name_;
  std::vector<StrategyRule> rules_;
};

/// Exact number of scalars selected by `strategy`.
std::size_t count_selected_params(const ArchDescriptor& arch, const UpdateStrategy& strategy);

}  // namespace odl
