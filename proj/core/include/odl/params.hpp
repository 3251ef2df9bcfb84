#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "odl/arch.hpp"

namespace odl {

enum class Role : std::uint8_t {
  conv_weight,
  conv_bias,
  bn_gamma,
  bn_beta,
  bn_running_mean,
  bn_running_var,
  fc_weight,
  fc_bias,
};

const char* to_string(Role role);
Role role_from_string(const std::string& s);

/// Weights and biases; running statistics are state, not trainable.
bool is_learnable(Role role);

struct ParamKey {
  int layer = 0;
  Role role = Role::conv_weight;
  auto operator<=>(const ParamKey&) const = default;
};

std::string to_string(const ParamKey& key);

struct ParamSpec {
  ParamKey key;
  std::vector<int> shape;
  std::size_t size() const;
};

/// Every tensor the descriptor implies, ordered by (layer, role).
std::vector<ParamSpec> param_specs(const ArchDescriptor& arch);

/// Number of learnable scalars in the descriptor.
std::size_t count_learnable_params(const ArchDescriptor& arch);

template <typename Real>
struct ParamTensor {
  std::vector<int> shape;
  std::vector<Real> values;
};

/// Flat per-layer parameter store keyed by (layer index, role).
template <typename Real>
class ModelParams {
 public:
  using Map = std::map<ParamKey, ParamTensor<Real>>;

  ModelParams() = default;

  /// Zero weights and biases, unit gamma, zero running mean, unit running var.
  explicit ModelParams(const ArchDescriptor& arch);

  bool contains(const ParamKey& key) const { return tensors_.count(key) != 0; }
  std::span<Real> at(const ParamKey& key);
  std::span<const Real> at(const ParamKey& key) const;
  const std::vector<int>& shape(const ParamKey& key) const;

  const Map& tensors() const { return tensors_; }
  Map& tensors() { return tensors_; }

  template <typename To>
  ModelParams<To> cast() const {
    ModelParams<To> out;
    for (const auto& [k, t] : tensors_) {
      auto& dst = out.tensors()[k];
      dst.shape = t.shape;
      dst.values.assign(t.values.begin(), t.values.end());
    }
    return out;
  }

  /// Throws ShapeError when tensors are missing or mis-shaped for `arch`.
  void check_against(const ArchDescriptor& arch) const;

  friend bool operator==(const ModelParams& a, const ModelParams& b) {
    if (a.tensors_.size() != b.tensors_.size()) return false;
    auto ia = a.tensors_.begin();
    auto ib = b.tensors_.begin();
    for (; ia != a.tensors_.end(); ++ia, ++ib) {
      if (ia->first != ib->first || ia->second.shape != ib->second.shape || ia->second.values != ib->second.values) {
        return false;
      }
    }
    return true;
  }

 private:
  Map tensors_;
};

extern template class ModelParams<float>;
extern template class ModelParams<double>;

/// Uniform fan-in initialisation: conv weights ~ U(+-sqrt(6/fan_in)),
/// fc weights ~ U(+-1/sqrt(fan_in)); biases and beta zero, gamma one.
void init_uniform_fan_in(ModelParams<float>& params, const ArchDescriptor& arch, std::uint64_t seed);

/// Checkpoint container: `<dir>/arch.txt`, `<dir>/params.manifest`,
/// `<dir>/params.bin`. The binary holds little-endian IEEE-754 binary32
/// values; the manifest lists `layer role dims offset` per tensor with dims
/// joined by 'x' and offsets in bytes.
void save_checkpoint(const std::string& dir, const ArchDescriptor& arch, const ModelParams<float>& params);

struct Checkpoint {
  ArchDescriptor arch;
  ModelParams<float> params;
};

Checkpoint load_checkpoint(const std::string& dir);

std::string params_manifest(const ModelParams<float>& params);
std::vector<std::uint8_t> params_binary(const ModelParams<float>& params);
ModelParams<float> params_from_container(const std::string& manifest, std::span<const std::uint8_t> blob);

}  // namespace odl
