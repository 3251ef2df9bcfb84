#include "odl/arch.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "odl/error.hpp"

namespace odl {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

std::string layer_label(std::size_t index, const LayerSpec& spec) {
  return "layer " + std::to_string(index) + " (" + to_string(kind_of(spec)) + ")";
}

}  // namespace

LayerKind kind_of(const LayerSpec& spec) {
  return std::visit(Overloaded{
                        [](const Conv2D&) { return LayerKind::conv; },
                        [](const BatchNorm&) { return LayerKind::batch_norm; },
                        [](const ReLU&) { return LayerKind::relu; },
                        [](const MaxPool&) { return LayerKind::max_pool; },
                        [](const Flatten&) { return LayerKind::flatten; },
                        [](const FullyConnected&) { return LayerKind::fully_connected; },
                    },
                    spec);
}

const char* to_string(LayerKind kind) {
  switch (kind) {
    case LayerKind::conv: return "conv";
    case LayerKind::batch_norm: return "bn";
    case LayerKind::relu: return "relu";
    case LayerKind::max_pool: return "maxpool";
    case LayerKind::flatten: return "flatten";
    case LayerKind::fully_connected: return "fc";
  }
  return "?";
}

std::vector<Shape3> ArchDescriptor::shapes() const {
  if (input.channels <= 0 || input.height <= 0 || input.width <= 0) {
    throw ShapeError("input shape must be positive");
  }
  std::vector<Shape3> out;
  out.reserve(layers.size() + 1);
  Shape3 cur = input;
  out.push_back(cur);
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const auto& spec = layers[i];
    std::visit(Overloaded{
                   [&](const Conv2D& c) {
                     if (c.out_channels <= 0 || c.kernel <= 0 || c.stride <= 0 || c.padding < 0) {
                       throw ShapeError(layer_label(i, spec) + ": invalid hyper-parameters");
                     }
                     const int oh = (cur.height + 2 * c.padding - c.kernel) / c.stride + 1;
                     const int ow = (cur.width + 2 * c.padding - c.kernel) / c.stride + 1;
                     if (cur.height + 2 * c.padding < c.kernel || cur.width + 2 * c.padding < c.kernel || oh <= 0 ||
                         ow <= 0) {
                       throw ShapeError(layer_label(i, spec) + ": kernel larger than padded input");
                     }
                     cur = {c.out_channels, oh, ow};
                   },
                   [&](const BatchNorm& b) {
                     if (b.channels != cur.channels) {
                       throw ShapeError(layer_label(i, spec) + ": expects " + std::to_string(b.channels) +
                                        " channels, input has " + std::to_string(cur.channels));
                     }
                   },
                   [&](const ReLU&) {},
                   [&](const MaxPool& p) {
                     if (p.kernel <= 0 || p.stride <= 0 || p.kernel > 16 || cur.height < p.kernel ||
                         cur.width < p.kernel) {
                       throw ShapeError(layer_label(i, spec) + ": invalid pooling window");
                     }
                     cur = {cur.channels, (cur.height - p.kernel) / p.stride + 1, (cur.width - p.kernel) / p.stride + 1};
                   },
                   [&](const Flatten&) { cur = {static_cast<int>(cur.elements()), 1, 1}; },
                   [&](const FullyConnected& f) {
                     if (f.out_features <= 0) throw ShapeError(layer_label(i, spec) + ": out_features must be positive");
                     if (cur.height != 1 || cur.width != 1) {
                       throw ShapeError(layer_label(i, spec) + ": input must be flattened");
                     }
                     cur = {f.out_features, 1, 1};
                   },
               },
               spec);
    out.push_back(cur);
  }
  return out;
}

void ArchDescriptor::validate() const {
  const auto s = shapes();
  for (std::size_t i = 0; i < layers.size(); ++i) {
    if (kind_of(layers[i]) == LayerKind::batch_norm && (i == 0 || kind_of(layers[i - 1]) != LayerKind::conv)) {
      throw ShapeError("layer " + std::to_string(i) + ": batch norm must immediately follow a conv layer");
    }
  }
  const Shape3& last = s.back();
  if (last.elements() != 4 || last.height != 1 || last.width != 1) {
    throw ShapeError("network output must be exactly 4 values (x, y, z, yaw)");
  }
}

ArchDescriptor reference_descriptor() {
  ArchDescriptor a;
  a.input = {1, 96, 160};
  auto block = [&](int ch, int k, int stride, int pad) {
    a.layers.emplace_back(Conv2D{ch, k, stride, pad, false});
    a.layers.emplace_back(BatchNorm{ch});
    a.layers.emplace_back(ReLU{});
  };
  block(32, 5, 2, 2);  // 48x80
  a.layers.emplace_back(MaxPool{2, 2});  // 24x40
  block(32, 3, 2, 1);  // 12x20
  block(32, 3, 1, 1);
  block(64, 3, 2, 1);  // 6x10
  block(64, 3, 1, 1);
  block(128, 3, 2, 1);  // 3x5
  block(128, 3, 1, 1);
  a.layers.emplace_back(Flatten{});  // 1920
  a.layers.emplace_back(FullyConnected{4});
  return a;
}

ArchDescriptor desk_descriptor() {
  ArchDescriptor a;
  a.input = {1, 96, 160};
  auto block = [&](int ch, int k, int stride, int pad) {
    a.layers.emplace_back(Conv2D{ch, k, stride, pad, false});
    a.layers.emplace_back(BatchNorm{ch});
    a.layers.emplace_back(ReLU{});
  };
  a.layers.emplace_back(MaxPool{2, 2});  // 48x80
  block(8, 5, 2, 2);                     // 24x40
  a.layers.emplace_back(MaxPool{2, 2});  // 12x20
  block(16, 3, 2, 1);                    // 6x10
  block(16, 3, 1, 1);
  block(32, 3, 2, 1);  // 3x5
  a.layers.emplace_back(Flatten{});  // 480
  a.layers.emplace_back(FullyConnected{4});
  return a;
}

std::string to_text(const ArchDescriptor& arch) {
  std::ostringstream os;
  os << "input " << arch.input.channels << " " << arch.input.height << " " << arch.input.width << "\n";
  for (const auto& spec : arch.layers) {
    std::visit(Overloaded{
                   [&](const Conv2D& c) {
                     os << "conv " << c.out_channels << " " << c.kernel << " " << c.stride << " " << c.padding << " "
                        << (c.bias ? "bias" : "nobias") << "\n";
                   },
                   [&](const BatchNorm& b) { os << "bn " << b.channels << "\n"; },
                   [&](const ReLU&) { os << "relu\n"; },
                   [&](const MaxPool& p) { os << "maxpool " << p.kernel << " " << p.stride << "\n"; },
                   [&](const Flatten&) { os << "flatten\n"; },
                   [&](const FullyConnected& f) { os << "fc " << f.out_features << "\n"; },
               },
               spec);
  }
  return os.str();
}

ArchDescriptor arch_from_text(const std::string& text) {
  ArchDescriptor a;
  bool have_input = false;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::string word;
    if (!(ls >> word)) continue;
    auto fail = [&](const std::string& why) {
      throw ShapeError("descriptor line " + std::to_string(line_no) + ": " + why);
    };
    auto read_int = [&]() {
      int v = 0;
      if (!(ls >> v)) fail("expected integer after '" + word + "'");
      return v;
    };
    if (word == "input") {
      a.input.channels = read_int();
      a.input.height = read_int();
      a.input.width = read_int();
      have_input = true;
    } else if (word == "conv") {
      Conv2D c;
      c.out_channels = read_int();
      c.kernel = read_int();
      c.stride = read_int();
      c.padding = read_int();
      std::string b;
      if (ls >> b) {
        if (b == "bias") c.bias = true;
        else if (b == "nobias") c.bias = false;
        else fail("expected bias|nobias");
      }
      a.layers.emplace_back(c);
    } else if (word == "bn") {
      a.layers.emplace_back(BatchNorm{read_int()});
    } else if (word == "relu") {
      a.layers.emplace_back(ReLU{});
    } else if (word == "maxpool") {
      MaxPool p;
      p.kernel = read_int();
      p.stride = read_int();
      a.layers.emplace_back(p);
    } else if (word == "flatten") {
      a.layers.emplace_back(Flatten{});
    } else if (word == "fc") {
      a.layers.emplace_back(FullyConnected{read_int()});
    } else {
      fail("unknown layer '" + word + "'");
    }
    std::string extra;
    if (ls >> extra) fail("trailing token '" + extra + "'");
  }
  if (!have_input) throw ShapeError("descriptor has no 'input' line");
  return a;
}

ArchDescriptor load_arch(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open descriptor " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return arch_from_text(ss.str());
}

void save_arch(const ArchDescriptor& arch, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw RunError("cannot write " + path);
  f << to_text(arch);
}

ArchDescriptor resolve_arch(const std::string& name_or_path) {
  if (name_or_path == "reference") return reference_descriptor();
  if (name_or_path == "desk") return desk_descriptor();
  if (!std::filesystem::exists(name_or_path)) {
    throw ConfigError("architecture '" + name_or_path + "' is neither a preset nor an existing file");
  }
  return load_arch(name_or_path);
}

}  // namespace odl
