#include "odl_cli/config.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "odl/error.hpp"

extern char** environ;

namespace odl::cli {

using nlohmann::json;

namespace {

// Reads keys of one JSON object and rejects whatever was not read.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(where() + " must be an object");
  }

  template <typename T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    auto it = j_.find(key);
    if (it == j_.end()) return;
    try {
      if constexpr (std::is_same_v<T, double>) {
        if (!it->is_number()) throw ConfigError("");
      } else if constexpr (std::is_integral_v<T> && !std::is_same_v<T, bool>) {
        if (!it->is_number_integer()) throw ConfigError("");
      } else if constexpr (std::is_same_v<T, bool>) {
        if (!it->is_boolean()) throw ConfigError("");
      } else if constexpr (std::is_same_v<T, std::string>) {
        if (!it->is_string()) throw ConfigError("");
      }
      out = it->get<T>();
    } catch (const std::exception&) {
      throw ConfigError(where(key) + ": unexpected value " + it->dump());
    }
  }

  bool has(const char* key) const { return j_.contains(key); }

  Section sub(const char* key) {
    seen_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? Section(empty(), where(key)) : Section(*it, where(key));
  }

  const json* raw(const char* key) {
    seen_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  std::string where(const std::string& key = {}) const {
    if (key.empty()) return path_.empty() ? "config" : path_;
    return path_.empty() ? key : path_ + "." + key;
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!seen_.count(it.key())) throw ConfigError("unknown config key '" + where(it.key()) + "'");
    }
  }

 private:
  static const json& empty() {
    static const json e = json::object();
    return e;
  }

  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

void read_domain(Section s, DomainSpec& d) {
  s.get("name", d.name);
  s.get("background_level", d.background_level);
  s.get("background_gradient", d.background_gradient);
  s.get("texture_amplitude", d.texture_amplitude);
  s.get("texture_scale_px", d.texture_scale_px);
  s.get("texture_seed", d.texture_seed);
  s.get("subject_level", d.subject_level);
  s.get("mark_level", d.mark_level);
  s.get("subject_half_width_m", d.subject_half_width_m);
  s.get("subject_half_height_m", d.subject_half_height_m);
  s.get("subject_variation", d.subject_variation);
  s.get("focal_px", d.focal_px);
  s.get("cx", d.cx);
  s.get("cy", d.cy);
  s.get("noise_sigma", d.noise_sigma);
  s.get("vignette", d.vignette);
  s.finish();
}

void read_synth(Section s, SynthConfig& c) {
  s.get("pretrain_samples", c.pretrain_samples);
  s.get("subjects", c.subjects);
  s.get("flight_seconds", c.flight_seconds);
  s.get("still_min_s", c.still_min_s);
  s.get("still_max_s", c.still_max_s);
  s.get("move_min_s", c.move_min_s);
  s.get("move_max_s", c.move_max_s);
  s.get("walk_speed_min", c.walk_speed_min);
  s.get("walk_speed_max", c.walk_speed_max);
  s.get("relative_time_constant_s", c.relative_time_constant_s);
  s.get("yaw_step_sigma", c.yaw_step_sigma);
  {
    Section r = s.sub("range");
    r.get("x_min", c.range.x_min);
    r.get("x_max", c.range.x_max);
    r.get("bearing_max", c.range.bearing_max);
    r.get("z_max", c.range.z_max);
    r.finish();
  }
  {
    Section o = s.sub("odometry");
    o.get("sigma_x", c.odometry.sigma_x);
    o.get("sigma_y", c.odometry.sigma_y);
    o.get("sigma_yaw", c.odometry.sigma_yaw);
    o.get("sigma_z", c.odometry.sigma_z);
    o.finish();
  }
  read_domain(s.sub("domain_a"), c.a);
  read_domain(s.sub("domain_b"), c.b);
  s.finish();
  c.validate();
}

void read_train(Section s, Config& c) {
  TrainConfig& t = c.train;
  s.get("lr", t.adam.lr);
  s.get("beta1", t.adam.beta1);
  s.get("beta2", t.adam.beta2);
  s.get("eps", t.adam.eps);
  s.get("batch_size", t.batch_size);
  s.get("pretrain_epochs", t.pretrain_epochs);
  s.get("finetune_epochs", t.finetune_epochs);
  s.get("validation_fraction", t.validation_fraction);
  s.get("bn_momentum", t.bn_momentum);
  s.get("p_time_reverse", t.p_time_reverse);
  std::string strategy = "AllWB", scenario = "t(a)", bn = "auto";
  s.get("strategy", strategy);
  s.get("scenario", scenario);
  s.get("bn_stats", bn);
  s.get("dt", c.dt);
  s.get("lambda_sc", c.lambda_sc);
  bool aug_pre = true, aug_ft = true;
  s.get("augment_pretrain", aug_pre);
  s.get("augment_finetune", aug_ft);
  s.finish();
  t.strategy = UpdateStrategy::parse(strategy);
  t.scenario = LossScenario::parse(scenario, c.dt, c.lambda_sc);
  t.bn_stats = bn_stats_from_string(bn);
  if (!aug_pre) t.augment = AugmentParams::none();
  if (!aug_ft) t.finetune_augment = AugmentParams::none();
  t.validate();
}

SocProfile read_soc(const json& j, const std::string& where) {
  if (j.is_string()) {
    const auto name = j.get<std::string>();
    if (name == "gap9") return gap9_profile();
    if (name == "gap8") return gap8_profile();
    throw ConfigError(where + ": unknown SoC '" + name + "' (gap9, gap8 or an object)");
  }
  Section s(j, where);
  SocProfile p;
  s.get("name", p.name);
  s.get("frequency_hz", p.frequency_hz);
  s.get("peak_mac_per_cycle_fwd", p.peak_mac_per_cycle_fwd);
  s.get("peak_mac_per_cycle_bwd", p.peak_mac_per_cycle_bwd);
  s.get("effective_mac_per_cycle", p.effective_mac_per_cycle);
  s.get("emulation_multiplier", p.emulation_multiplier);
  s.finish();
  if (p.name.empty()) throw ConfigError(where + ": SoC needs a name");
  p.validate();
  return p;
}

void require(bool ok, const std::string& msg) {
  if (!ok) throw ConfigError(msg);
}

void apply_env(json& j, const std::vector<std::pair<std::string, std::string>>& env) {
  for (const auto& [name, value] : env) {
    if (name.rfind("ODL_", 0) != 0) continue;
    std::string rest = name.substr(4);
    std::vector<std::string> path;
    for (std::size_t pos = 0;;) {
      const auto next = rest.find("__", pos);
      std::string part = rest.substr(pos, next == std::string::npos ? std::string::npos : next - pos);
      for (auto& ch : part) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
      if (part.empty()) throw ConfigError("malformed override variable '" + name + "'");
      path.push_back(part);
      if (next == std::string::npos) break;
      pos = next + 2;
    }
    json v = json::parse(value, nullptr, false);
    if (v.is_discarded()) v = value;
    json* node = &j;
    for (std::size_t k = 0; k + 1 < path.size(); ++k) {
      if (!node->is_object()) throw ConfigError("override '" + name + "' does not address an object");
      node = &(*node)[path[k]];
      if (node->is_null()) *node = json::object();
    }
    if (!node->is_object()) throw ConfigError("override '" + name + "' does not address an object");
    (*node)[path.back()] = v;
  }
}

}  // namespace

Config parse_config(const std::string& text, const std::vector<std::pair<std::string, std::string>>& env) {
  json j = json::parse(text, nullptr, false, true);
  if (j.is_discarded()) throw ConfigError("config is not valid JSON");
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  apply_env(j, env);

  Config c;
  Section s(j, "");
  s.get("seed", c.seed);
  s.get("jobs", c.jobs);
  s.get("arch", c.arch);
  s.get("checkpoint", c.checkpoint);
  s.get("folds", c.folds);
  s.get("subject", c.subject);
  read_synth(s.sub("synth"), c.synth);
  {
    Section d = s.sub("data");
    d.get("pretrain", c.data.pretrain);
    d.get("flights", c.data.flights);
    d.finish();
  }
  read_train(s.sub("train"), c);
  {
    Section a = s.sub("acquisition");
    a.get("segment_s", c.acquisition.segment_s);
    a.get("rate_hz", c.acquisition.rate_hz);
    a.get("max_samples", c.acquisition.max_samples);
    a.get("gap_samples", c.acquisition.gap_samples);
    a.get("max_fraction", c.acquisition.max_fraction);
    a.finish();
    c.acquisition.validate();
  }
  {
    Section g = s.sub("sweep");
    g.get("set_sizes", c.sweep.set_sizes);
    g.get("rates_hz", c.sweep.rates_hz);
    g.get("max_duration_s", c.sweep.max_duration_s);
    g.finish();
    require(!c.sweep.set_sizes.empty() && !c.sweep.rates_hz.empty(), "sweep grid must not be empty");
    for (int n : c.sweep.set_sizes) require(n > 0, "sweep set sizes must be positive");
    for (double r : c.sweep.rates_hz) {
      FinetuneSetSpec probe;
      probe.rate_hz = r;
      probe.validate();
    }
    require(c.sweep.max_duration_s > 0, "sweep.max_duration_s must be positive");
  }
  {
    Section m = s.sub("methods");
    m.get("strategies", c.methods.strategies);
    m.get("set_sizes", c.methods.set_sizes);
    m.finish();
    require(!c.methods.strategies.empty() && !c.methods.set_sizes.empty(), "methods grid must not be empty");
    for (const auto& name : c.methods.strategies) UpdateStrategy::parse(name);
    for (int n : c.methods.set_sizes) require(n > 0, "method set sizes must be positive");
  }
  {
    Section l = s.sub("ladder");
    l.get("scenarios", c.ladder.scenarios);
    l.get("dt_s", c.ladder.dt_s);
    l.finish();
    require(!c.ladder.scenarios.empty() && !c.ladder.dt_s.empty(), "ladder grid must not be empty");
    for (double dt : c.ladder.dt_s) {
      for (const auto& label : c.ladder.scenarios) {
        const auto sc = LossScenario::parse(label, dt, c.lambda_sc);
        if (sc.has_sc()) {
          PairSource src;
          src.rate_hz = c.acquisition.rate_hz;
          const double steps = dt * src.rate_hz;
          require(std::abs(steps - std::round(steps)) < 1e-9 && steps >= 1,
                  "ladder dt " + std::to_string(dt) + " s is not a multiple of the acquisition period");
        }
      }
    }
  }
  {
    Section k = s.sub("cost");
    k.get("strategies", c.cost.strategies);
    k.get("set_sizes", c.cost.set_sizes);
    k.get("epochs", c.cost.epochs);
    if (const json* socs = k.raw("socs")) {
      if (!socs->is_array()) throw ConfigError("cost.socs must be an array");
      c.cost.socs.clear();
      for (std::size_t i = 0; i < socs->size(); ++i) {
        c.cost.socs.push_back(read_soc((*socs)[i], "cost.socs[" + std::to_string(i) + "]"));
      }
    }
    k.finish();
    for (const auto& name : c.cost.strategies) UpdateStrategy::parse(name);
    for (int n : c.cost.set_sizes) require(n > 0, "cost set sizes must be positive");
    require(c.cost.epochs > 0, "cost.epochs must be positive");
  }
  s.finish();

  require(c.jobs >= 1, "jobs must be >= 1");
  require(c.folds >= 1, "folds must be >= 1");
  require(c.subject >= 0, "subject must be >= 0");
  resolve_arch(c.arch);  // fail fast on a bad descriptor
  c.train.seed = c.seed;
  c.resolved = j;
  return c;
}

Config load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return parse_config(ss.str(), odl_environment());
  } catch (const ConfigError& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

std::vector<std::pair<std::string, std::string>> odl_environment() {
  std::vector<std::pair<std::string, std::string>> out;
  for (char** e = environ; e && *e; ++e) {
    const std::string kv = *e;
    if (kv.rfind("ODL_", 0) != 0) continue;
    const auto eq = kv.find('=');
    if (eq == std::string::npos) continue;
    out.emplace_back(kv.substr(0, eq), kv.substr(eq + 1));
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::string config_hash(const json& resolved) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char ch : resolved.dump()) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace odl::cli
