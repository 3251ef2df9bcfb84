#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "odl/cost_model.hpp"
#include "odl/dataset.hpp"
#include "odl/synth.hpp"
#include "odl/trainer.hpp"

namespace odl::cli {

struct DataPaths {
  std::string pretrain;              ///< domain-A sequence directory; synthesized when empty
  std::vector<std::string> flights;  ///< domain-B sequence directories; synthesized when empty
};

struct SweepGrid {
  std::vector<int> set_sizes{32, 64, 128, 256, 512};
  std::vector<double> rates_hz{4.0, 2.0, 1.0, 0.5};
  double max_duration_s = 128.0;
};

struct MethodGrid {
  std::vector<std::string> strategies{"AllWB", "BnWB", "FcWB", "BiasOnly"};
  std::vector<int> set_sizes{32, 128, 512};
};

struct LadderGrid {
  std::vector<std::string> scenarios{"t(a)",
                                     "sc(a,dD,dH)",
                                     "sc(a,dD~,dH)",
                                     "sc(a,dD~,H?)",
                                     "sc(a,dD,H?)",
                                     "t(s32)+sc(a,dD~,H?)",
                                     "t(s32)+sc(s128,dD~,H?)"};
  std::vector<double> dt_s{0.5, 1.0, 2.0, 4.0};
};

struct CostSpec {
  std::vector<std::string> strategies{"AllWB", "BnWB", "FcWB", "BiasOnly"};
  std::vector<int> set_sizes{512, 128};
  int epochs = 5;
  std::vector<SocProfile> socs{gap9_profile(), gap8_profile()};
};

/// Everything a command needs, fully validated on load.
struct Config {
  std::uint64_t seed = 1;
  int jobs = 1;
  std::string arch = "desk";
  std::string checkpoint;  ///< pretrained checkpoint; pretrained inline when empty
  int folds = 3;
  int subject = 0;  ///< flight used by `finetune`
  SynthConfig synth;
  DataPaths data;
  TrainConfig train;
  double dt = 2.0;
  double lambda_sc = 1.0;
  FinetuneSetSpec acquisition;
  SweepGrid sweep;
  MethodGrid methods;
  LadderGrid ladder;
  CostSpec cost;

  /// Canonical JSON of the resolved config, used for the manifest hash.
  nlohmann::json resolved;
};

/// Parses `text` (JSON), applies `ODL_*` environment overrides and validates.
/// Unknown keys and bad values throw ConfigError.
Config parse_config(const std::string& text, const std::vector<std::pair<std::string, std::string>>& env = {});
Config load_config(const std::string& path);

/// `ODL_` variables of the current environment.
std::vector<std::pair<std::string, std::string>> odl_environment();

/// 64-bit FNV-1a of the canonical JSON dump, as 16 hex digits.
std::string config_hash(const nlohmann::json& resolved);

}  // namespace odl::cli
