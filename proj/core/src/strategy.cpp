#include "odl/strategy.hpp"

#include <algorithm>

#include "odl/error.hpp"

namespace odl {

namespace {

int last_fc_index(const ArchDescriptor& arch) {
  for (int i = static_cast<int>(arch.layers.size()) - 1; i >= 0; --i) {
    if (kind_of(arch.layers[i]) == LayerKind::fully_connected) return i;
  }
  return -1;
}

bool layer_matches(const ArchDescriptor& arch, int layer, LayerSelector sel) {
  const LayerKind k = kind_of(arch.layers.at(layer));
  switch (sel) {
    case LayerSelector::all: return true;
    case LayerSelector::conv: return k == LayerKind::conv;
    case LayerSelector::batch_norm: return k == LayerKind::batch_norm;
    case LayerSelector::last_fc: return layer == last_fc_index(arch);
  }
  return false;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

UpdateStrategy parse_term(const std::string& term) {
  if (term == "AllWB") return UpdateStrategy::all_wb();
  if (term == "FcWB") return UpdateStrategy::fc_wb();
  if (term == "BnWB") return UpdateStrategy::bn_wb();
  if (term == "BiasOnly") return UpdateStrategy::bias_only();
  const auto open = term.find('(');
  if (open == std::string::npos || term.back() != ')') throw ConfigError("bad strategy term '" + term + "'");
  const std::string sel = term.substr(0, open);
  const std::string what = term.substr(open + 1, term.size() - open - 2);
  const bool w = what == "w" || what == "w+b";
  const bool b = what == "b" || what == "w+b";
  if (!w && !b) throw ConfigError("strategy term '" + term + "': expected (w), (b) or (w+b)");
  StrategyRule rule;
  if (sel == "all") {
    rule.layers = LayerSelector::all;
    if (w) rule.roles.insert(rule.roles.end(), {Role::conv_weight, Role::bn_gamma, Role::fc_weight});
    if (b) rule.roles.insert(rule.roles.end(), {Role::conv_bias, Role::bn_beta, Role::fc_bias});
  } else if (sel == "conv") {
    rule.layers = LayerSelector::conv;
    if (w) rule.roles.push_back(Role::conv_weight);
    if (b) rule.roles.push_back(Role::conv_bias);
  } else if (sel == "bn") {
    rule.layers = LayerSelector::batch_norm;
    if (w) rule.roles.push_back(Role::bn_gamma);
    if (b) rule.roles.push_back(Role::bn_beta);
  } else if (sel == "fc") {
    rule.layers = LayerSelector::last_fc;
    if (w) rule.roles.push_back(Role::fc_weight);
    if (b) rule.roles.push_back(Role::fc_bias);
  } else {
    throw ConfigError("strategy term '" + term + "': unknown layer selector '" + sel + "'");
  }
  return UpdateStrategy(term, {rule});
}

}  // namespace

UpdateStrategy UpdateStrategy::all_wb() {
  return {"all(w+b)",
          {{LayerSelector::all,
            {Role::conv_weight, Role::conv_bias, Role::bn_gamma, Role::bn_beta, Role::fc_weight, Role::fc_bias}}}};
}

UpdateStrategy UpdateStrategy::fc_wb() { return {"fc(w+b)", {{LayerSelector::last_fc, {Role::fc_weight, Role::fc_bias}}}}; }

UpdateStrategy UpdateStrategy::bn_wb() {
  return {"bn(w+b)", {{LayerSelector::batch_norm, {Role::bn_gamma, Role::bn_beta}}}};
}

UpdateStrategy UpdateStrategy::bias_only() {
  return {"all(b)", {{LayerSelector::all, {Role::conv_bias, Role::bn_beta, Role::fc_bias}}}};
}

UpdateStrategy UpdateStrategy::none() { return {"none", {}}; }

UpdateStrategy UpdateStrategy::parse(const std::string& label) {
  const std::string s = trim(label);
  if (s == "none") return none();
  // split on '+' outside parentheses
  std::vector<std::string> terms;
  int depth = 0;
  std::string cur;
  for (char ch : s) {
    if (ch == '(') ++depth;
    if (ch == ')') --depth;
    if (ch == '+' && depth == 0) {
      terms.push_back(trim(cur));
      cur.clear();
    } else if (ch != ' ') {
      cur += ch;
    }
  }
  terms.push_back(trim(cur));
  UpdateStrategy out;
  for (const auto& t : terms) {
    if (t.empty()) throw ConfigError("empty term in strategy '" + label + "'");
    out = out.empty() && out.name_.empty() ? parse_term(t) : out + parse_term(t);
  }
  return out;
}

bool UpdateStrategy::selects(const ArchDescriptor& arch, int layer, Role role) const {
  if (!is_learnable(role)) return false;
  for (const auto& rule : rules_) {
    if (std::find(rule.roles.begin(), rule.roles.end(), role) != rule.roles.end() &&
        layer_matches(arch, layer, rule.layers)) {
      return true;
    }
  }
  return false;
}

std::vector<ParamKey> UpdateStrategy::selected_keys(const ArchDescriptor& arch) const {
  std::vector<ParamKey> keys;
  for (const auto& spec : param_specs(arch)) {
    if (selects(arch, spec.key.layer, spec.key.role)) keys.push_back(spec.key);
  }
  return keys;
}

UpdateStrategy operator+(const UpdateStrategy& a, const UpdateStrategy& b) {
  auto rules = a.rules_;
  rules.insert(rules.end(), b.rules_.begin(), b.rules_.end());
  return {a.name_ + "+" + b.name_, std::move(rules)};
}

std::size_t count_selected_params(const ArchDescriptor& arch, const UpdateStrategy& strategy) {
  std::size_t n = 0;
  for (const auto& spec : param_specs(arch)) {
    if (strategy.selects(arch, spec.key.layer, spec.key.role)) n += spec.size();
  }
  return n;
}

}  // namespace odl
