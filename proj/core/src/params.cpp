#include "odl/params.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "odl/error.hpp"

namespace odl {

namespace {

constexpr Role kAllRoles[] = {Role::conv_weight,     Role::conv_bias,      Role::bn_gamma,  Role::bn_beta,
                              Role::bn_running_mean, Role::bn_running_var, Role::fc_weight, Role::fc_bias};

std::string join_dims(const std::vector<int>& shape) {
  std::string s;
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += 'x';
    s += std::to_string(shape[i]);
  }
  return s;
}

std::vector<int> split_dims(const std::string& s) {
  std::vector<int> dims;
  std::stringstream ss(s);
  std::string part;
  while (std::getline(ss, part, 'x')) {
    try {
      std::size_t used = 0;
      const int v = std::stoi(part, &used);
      if (used != part.size() || v <= 0) throw std::invalid_argument(part);
      dims.push_back(v);
    } catch (const std::exception&) {
      throw IngestionError("bad tensor shape '" + s + "'");
    }
  }
  if (dims.empty()) throw IngestionError("empty tensor shape");
  return dims;
}

std::vector<std::uint8_t> read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IngestionError("cannot open " + path);
  return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

}  // namespace

const char* to_string(Role role) {
  switch (role) {
    case Role::conv_weight: return "conv_weight";
    case Role::conv_bias: return "conv_bias";
    case Role::bn_gamma: return "bn_gamma";
    case Role::bn_beta: return "bn_beta";
    case Role::bn_running_mean: return "bn_running_mean";
    case Role::bn_running_var: return "bn_running_var";
    case Role::fc_weight: return "fc_weight";
    case Role::fc_bias: return "fc_bias";
  }
  return "?";
}

Role role_from_string(const std::string& s) {
  for (Role r : kAllRoles) {
    if (s == to_string(r)) return r;
  }
  throw IngestionError("unknown parameter role '" + s + "'");
}

bool is_learnable(Role role) { return role != Role::bn_running_mean && role != Role::bn_running_var; }

std::string to_string(const ParamKey& key) { return std::to_string(key.layer) + ":" + to_string(key.role); }

std::size_t ParamSpec::size() const {
  std::size_t n = 1;
  for (int d : shape) n *= static_cast<std::size_t>(d);
  return n;
}

std::vector<ParamSpec> param_specs(const ArchDescriptor& arch) {
  const auto shapes = arch.shapes();
  std::vector<ParamSpec> specs;
  for (std::size_t i = 0; i < arch.layers.size(); ++i) {
    const int li = static_cast<int>(i);
    const Shape3& in = shapes[i];
    if (const auto* c = std::get_if<Conv2D>(&arch.layers[i])) {
      specs.push_back({{li, Role::conv_weight}, {c->out_channels, in.channels, c->kernel, c->kernel}});
      if (c->bias) specs.push_back({{li, Role::conv_bias}, {c->out_channels}});
    } else if (const auto* b = std::get_if<BatchNorm>(&arch.layers[i])) {
      for (Role r : {Role::bn_gamma, Role::bn_beta, Role::bn_running_mean, Role::bn_running_var}) {
        specs.push_back({{li, r}, {b->channels}});
      }
    } else if (const auto* f = std::get_if<FullyConnected>(&arch.layers[i])) {
      specs.push_back({{li, Role::fc_weight}, {f->out_features, static_cast<int>(in.elements())}});
      specs.push_back({{li, Role::fc_bias}, {f->out_features}});
    }
  }
  return specs;
}

std::size_t count_learnable_params(const ArchDescriptor& arch) {
  std::size_t n = 0;
  for (const auto& s : param_specs(arch)) {
    if (is_learnable(s.key.role)) n += s.size();
  }
  return n;
}

template <typename Real>
ModelParams<Real>::ModelParams(const ArchDescriptor& arch) {
  for (const auto& spec : param_specs(arch)) {
    auto& t = tensors_[spec.key];
    t.shape = spec.shape;
    const Real fill = (spec.key.role == Role::bn_gamma || spec.key.role == Role::bn_running_var) ? Real(1) : Real(0);
    t.values.assign(spec.size(), fill);
  }
}

template <typename Real>
std::span<Real> ModelParams<Real>::at(const ParamKey& key) {
  auto it = tensors_.find(key);
  if (it == tensors_.end()) throw ShapeError("missing parameter " + to_string(key));
  return it->second.values;
}

template <typename Real>
std::span<const Real> ModelParams<Real>::at(const ParamKey& key) const {
  auto it = tensors_.find(key);
  if (it == tensors_.end()) throw ShapeError("missing parameter " + to_string(key));
  return it->second.values;
}

template <typename Real>
const std::vector<int>& ModelParams<Real>::shape(const ParamKey& key) const {
  auto it = tensors_.find(key);
  if (it == tensors_.end()) throw ShapeError("missing parameter " + to_string(key));
  return it->second.shape;
}

template <typename Real>
void ModelParams<Real>::check_against(const ArchDescriptor& arch) const {
  const auto specs = param_specs(arch);
  if (specs.size() != tensors_.size()) {
    throw ShapeError("parameter store has " + std::to_string(tensors_.size()) + " tensors, descriptor implies " +
                     std::to_string(specs.size()));
  }
  for (const auto& s : specs) {
    auto it = tensors_.find(s.key);
    if (it == tensors_.end()) throw ShapeError("missing parameter " + to_string(s.key));
    if (it->second.shape != s.shape || it->second.values.size() != s.size()) {
      throw ShapeError("parameter " + to_string(s.key) + " has shape " + join_dims(it->second.shape) + ", expected " +
                       join_dims(s.shape));
    }
  }
}

template class ModelParams<float>;
template class ModelParams<double>;

void init_uniform_fan_in(ModelParams<float>& params, const ArchDescriptor& arch, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  for (const auto& spec : param_specs(arch)) {
    auto values = params.at(spec.key);
    if (spec.key.role == Role::conv_weight || spec.key.role == Role::fc_weight) {
      std::size_t fan_in = 1;
      for (std::size_t d = 1; d < spec.shape.size(); ++d) fan_in *= static_cast<std::size_t>(spec.shape[d]);
      const double bound = spec.key.role == Role::conv_weight ? std::sqrt(6.0 / static_cast<double>(fan_in))
                                                              : 1.0 / std::sqrt(static_cast<double>(fan_in));
      std::uniform_real_distribution<double> dist(-bound, bound);
      for (auto& v : values) v = static_cast<float>(dist(rng));
    } else {
      const float fill = (spec.key.role == Role::bn_gamma || spec.key.role == Role::bn_running_var) ? 1.0f : 0.0f;
      for (auto& v : values) v = fill;
    }
  }
}

std::string params_manifest(const ModelParams<float>& params) {
  std::ostringstream os;
  os << "# layer role shape byte_offset\n";
  std::size_t offset = 0;
  for (const auto& [key, t] : params.tensors()) {
    os << key.layer << " " << to_string(key.role) << " " << join_dims(t.shape) << " " << offset << "\n";
    offset += t.values.size() * 4;
  }
  return os.str();
}

std::vector<std::uint8_t> params_binary(const ModelParams<float>& params) {
  std::vector<std::uint8_t> blob;
  for (const auto& [key, t] : params.tensors()) {
    for (float v : t.values) {
      const auto bits = std::bit_cast<std::uint32_t>(v);
      for (int b = 0; b < 4; ++b) blob.push_back(static_cast<std::uint8_t>((bits >> (8 * b)) & 0xffu));
    }
  }
  return blob;
}

ModelParams<float> params_from_container(const std::string& manifest, std::span<const std::uint8_t> blob) {
  ModelParams<float> params;
  std::istringstream in(manifest);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    int layer = 0;
    std::string role, dims;
    std::size_t offset = 0;
    if (!(ls >> layer >> role >> dims >> offset)) {
      throw IngestionError("manifest line " + std::to_string(line_no) + " is malformed");
    }
    ParamKey key{layer, role_from_string(role)};
    auto& t = params.tensors()[key];
    t.shape = split_dims(dims);
    std::size_t n = 1;
    for (int d : t.shape) n *= static_cast<std::size_t>(d);
    if (offset + n * 4 > blob.size()) {
      throw IngestionError("manifest line " + std::to_string(line_no) + " points past the end of the blob");
    }
    t.values.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      std::uint32_t bits = 0;
      for (int b = 0; b < 4; ++b) bits |= static_cast<std::uint32_t>(blob[offset + 4 * i + b]) << (8 * b);
      t.values[i] = std::bit_cast<float>(bits);
    }
  }
  return params;
}

void save_checkpoint(const std::string& dir, const ArchDescriptor& arch, const ModelParams<float>& params) {
  std::filesystem::create_directories(dir);
  save_arch(arch, dir + "/arch.txt");
  {
    std::ofstream f(dir + "/params.manifest", std::ios::binary);
    if (!f) throw RunError("cannot write " + dir + "/params.manifest");
    f << params_manifest(params);
  }
  const auto blob = params_binary(params);
  std::ofstream f(dir + "/params.bin", std::ios::binary);
  if (!f) throw RunError("cannot write " + dir + "/params.bin");
  f.write(reinterpret_cast<const char*>(blob.data()), static_cast<std::streamsize>(blob.size()));
}

Checkpoint load_checkpoint(const std::string& dir) {
  Checkpoint ck;
  if (!std::filesystem::exists(dir + "/arch.txt")) throw IngestionError("checkpoint " + dir + " has no arch.txt");
  ck.arch = load_arch(dir + "/arch.txt");
  ck.arch.validate();
  const auto manifest = read_file(dir + "/params.manifest");
  const auto blob = read_file(dir + "/params.bin");
  ck.params = params_from_container(std::string(manifest.begin(), manifest.end()), blob);
  ck.params.check_against(ck.arch);
  return ck;
}

}  // namespace odl
