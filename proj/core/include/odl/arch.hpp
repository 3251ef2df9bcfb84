#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <variant>
#include <vector>

namespace odl {

struct Conv2D {
  int out_channels = 0;
  int kernel = 1;
  int stride = 1;
  int padding = 0;
  bool bias = true;
  friend bool operator==(const Conv2D&, const Conv2D&) = default;
};

struct BatchNorm {
  int channels = 0;
  friend bool operator==(const BatchNorm&, const BatchNorm&) = default;
};

struct ReLU {
  friend bool operator==(const ReLU&, const ReLU&) = default;
};

struct MaxPool {
  int kernel = 2;
  int stride = 2;
  friend bool operator==(const MaxPool&, const MaxPool&) = default;
};

struct Flatten {
  friend bool operator==(const Flatten&, const Flatten&) = default;
};

struct FullyConnected {
  int out_features = 0;
  friend bool operator==(const FullyConnected&, const FullyConnected&) = default;
};

using LayerSpec = std::variant<Conv2D, BatchNorm, ReLU, MaxPool, Flatten, FullyConnected>;

enum class LayerKind { conv, batch_norm, relu, max_pool, flatten, fully_connected };

LayerKind kind_of(const LayerSpec& spec);
const char* to_string(LayerKind kind);

/// Channel-major activation shape of one sample. Flattened tensors use
/// channels = features, height = width = 1.
struct Shape3 {
  int channels = 0;
  int height = 0;
  int width = 0;
  std::size_t elements() const { return static_cast<std::size_t>(channels) * height * width; }
  friend bool operator==(const Shape3&, const Shape3&) = default;
};

/// Ordered layer list plus the input image shape. Construction via
/// `validate()` guarantees that shapes chain, that every BatchNorm follows a
/// Conv2D, and that the network ends in exactly 4 outputs.
struct ArchDescriptor {
  Shape3 input{1, 96, 160};
  std::vector<LayerSpec> layers;

  /// Input shape of each layer plus the final output shape (size layers+1).
  /// Throws ShapeError when a layer does not fit its input.
  std::vector<Shape3> shapes() const;

  /// Full validation; throws ShapeError.
  void validate() const;

  friend bool operator==(const ArchDescriptor&, const ArchDescriptor&) = default;
};

/// Eight-stage frontal pose network at 160x96 px (7 conv + 1 fc,
/// conv/bn/relu template, conv biases folded into bn).
ArchDescriptor reference_descriptor();

/// Narrow variant of the same template used for desk-scale training runs.
ArchDescriptor desk_descriptor();

/// Structured text form: one layer per line, e.g. `conv 32 5 2 2 nobias`.
std::string to_text(const ArchDescriptor& arch);
ArchDescriptor arch_from_text(const std::string& text);

ArchDescriptor load_arch(const std::string& path);
void save_arch(const ArchDescriptor& arch, const std::string& path);

/// Resolves "reference", "desk", or a file path.
ArchDescriptor resolve_arch(const std::string& name_or_path);

}  // namespace odl
