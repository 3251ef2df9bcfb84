#include "odl/losses.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "odl/error.hpp"

namespace odl {

namespace {

double sgn(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

PoseGrad l1_grad(const Pose4& a, const Pose4& b) {
  const auto r = residual(a, b);
  return {sgn(r[0]), sgn(r[1]), sgn(r[2]), sgn(r[3])};
}

// g^T J, i.e. J^T g for row-major J.
PoseGrad pull_back(const Jacobian4& j, const PoseGrad& g) {
  PoseGrad out{};
  for (int r = 0; r < 4; ++r) {
    for (int c = 0; c < 4; ++c) out[c] += g[r] * j[r][c];
  }
  return out;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_args(const std::string& inner) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : inner) {
    if (ch == ',') {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur += ch;
    }
  }
  out.push_back(trim(cur));
  return out;
}

void parse_set(const std::string& token, const std::string& label, SampleSet& set, int& size) {
  if (token == "a") {
    set = SampleSet::all;
    size = 0;
    return;
  }
  if (token.size() > 1 && token[0] == 's') {
    try {
      std::size_t used = 0;
      size = std::stoi(token.substr(1), &used);
      if (used == token.size() - 1 && size > 0) {
        set = SampleSet::still_subset;
        return;
      }
    } catch (const std::exception&) {
    }
  }
  throw ConfigError("scenario '" + label + "': bad sample-set selector '" + token + "'");
}

DroneMode parse_drone(const std::string& token, const std::string& label) {
  if (token == "D") return DroneMode::absolute;
  if (token == "dD") return DroneMode::odometry;
  if (token == "dD~") return DroneMode::noisy_odometry;
  throw ConfigError("scenario '" + label + "': bad drone mode '" + token + "' (D, dD, dD~)");
}

SubjectMode parse_subject(const std::string& token, const std::string& label) {
  if (token == "H") return SubjectMode::absolute;
  if (token == "dH") return SubjectMode::odometry;
  if (token == "H?") return SubjectMode::unknown;
  throw ConfigError("scenario '" + label + "': bad subject mode '" + token + "' (H, dH, H?)");
}

}  // namespace

LossScenario LossScenario::parse(const std::string& label, double dt, double lambda_sc) {
  LossScenario sc;
  sc.label = trim(label);
  sc.dt = dt;
  sc.lambda_sc = lambda_sc;
  if (!(dt > 0.0)) throw ConfigError("scenario dt must be positive");
  if (!std::isfinite(lambda_sc) || lambda_sc < 0.0) throw ConfigError("lambda_sc must be finite and >= 0");
  bool task_drone_explicit = false;
  bool seen_t = false, seen_sc = false;
  std::string rest = sc.label;
  std::size_t pos = 0;
  while (pos < rest.size()) {
    const auto open = rest.find('(', pos);
    const auto close = rest.find(')', pos);
    if (open == std::string::npos || close == std::string::npos || close < open) {
      throw ConfigError("scenario '" + label + "' is malformed");
    }
    const std::string head = trim(rest.substr(pos, open - pos));
    const auto args = split_args(rest.substr(open + 1, close - open - 1));
    if (head == "t") {
      if (seen_t || args.empty() || args.size() > 3) throw ConfigError("scenario '" + label + "': bad t(...) term");
      seen_t = true;
      parse_set(args[0], label, sc.task_set, sc.task_subset_size);
      if (args.size() >= 2) {
        sc.task_drone = parse_drone(args[1], label);
        task_drone_explicit = true;
      }
      if (args.size() == 3 && args[2] != "H") {
        throw ConfigError("scenario '" + label + "': the task term needs known subject poses (H)");
      }
    } else if (head == "sc") {
      if (seen_sc || args.size() != 3) throw ConfigError("scenario '" + label + "': sc(...) takes set,drone,subject");
      seen_sc = true;
      parse_set(args[0], label, sc.sc_set, sc.sc_subset_size);
      sc.sc_drone = parse_drone(args[1], label);
      sc.sc_subject = parse_subject(args[2], label);
    } else {
      throw ConfigError("scenario '" + label + "': unknown term '" + head + "'");
    }
    pos = close + 1;
    while (pos < rest.size() && rest[pos] == ' ') ++pos;
    if (pos < rest.size()) {
      if (rest[pos] != '+') throw ConfigError("scenario '" + label + "': expected '+' between terms");
      ++pos;
      while (pos < rest.size() && rest[pos] == ' ') ++pos;
      if (pos >= rest.size()) throw ConfigError("scenario '" + label + "': dangling '+'");
    }
  }
  if (!seen_t && !seen_sc) throw ConfigError("scenario '" + label + "' has neither a task nor a consistency term");
  // Still-subset task labels are propagated with the same odometry the
  // consistency term uses unless given explicitly.
  if (seen_t && seen_sc && !task_drone_explicit) sc.task_drone = sc.sc_drone;
  return sc;
}

double task_loss(std::span<const Pose4> predictions, std::span<const Pose4> targets) {
  return task_loss_grad(predictions, targets).value;
}

TaskLossGrad task_loss_grad(std::span<const Pose4> predictions, std::span<const Pose4> targets) {
  if (predictions.size() != targets.size()) throw ContractViolation("task_loss: predictions/targets size mismatch");
  if (predictions.empty()) throw UndefinedTermError("task loss over an empty sample set");
  TaskLossGrad out;
  const double inv_n = 1.0 / static_cast<double>(predictions.size());
  out.grad.resize(predictions.size());
  double sum = 0.0;
  for (std::size_t k = 0; k < predictions.size(); ++k) {
    sum += delta(predictions[k], targets[k]);
    auto g = l1_grad(predictions[k], targets[k]);
    for (auto& v : g) v *= inv_n;
    out.grad[k] = g;
  }
  out.value = sum * inv_n;
  return out;
}

Pose4 propagate_target(const Pose4& known, const Pose4& odometry) { return compose(invert(odometry), known); }

double sc_loss(const Pose4& pred_i, const Pose4& pred_j, const Pose4& odom_ij, const Pose4& subject_motion,
               TargetConvention convention) {
  const Pose4 chain = compose(compose(invert(pred_i), odom_ij), pred_j);
  const Pose4 target = convention == TargetConvention::chain ? subject_motion : invert(subject_motion);
  return delta(chain, target);
}

ScLossGrad sc_loss_grad(const Pose4& pred_i, const Pose4& pred_j, const Pose4& odom_ij, const Pose4& subject_motion,
                        TargetConvention convention) {
  const Pose4 a = invert(pred_i);
  const Pose4 b = compose(a, odom_ij);
  const Pose4 chain = compose(b, pred_j);
  const Pose4 target = convention == TargetConvention::chain ? subject_motion : invert(subject_motion);
  ScLossGrad out;
  out.value = delta(chain, target);
  const PoseGrad g = l1_grad(chain, target);
  const auto jc = compose_jacobians(b, pred_j);
  out.grad_j = pull_back(jc.wrt_b, g);
  const PoseGrad gb = pull_back(jc.wrt_a, g);
  const PoseGrad ga = pull_back(compose_jacobians(a, odom_ij).wrt_a, gb);
  out.grad_i = pull_back(invert_jacobian(pred_i), ga);
  return out;
}

CombinedLoss combined_loss(const LossScenario& scenario, std::span<const TaskTerm> tasks,
                           std::span<const PairTerm> pairs) {
  if (tasks.empty() && pairs.empty()) throw ConfigError("combined loss with both sample sets empty");
  CombinedLoss out;
  if (!tasks.empty()) {
    out.has_task = true;
    const double inv_n = 1.0 / static_cast<double>(tasks.size());
    out.task_grad.resize(tasks.size());
    double sum = 0.0;
    for (std::size_t k = 0; k < tasks.size(); ++k) {
      sum += delta(tasks[k].prediction, tasks[k].target);
      auto g = l1_grad(tasks[k].prediction, tasks[k].target);
      for (auto& v : g) v *= inv_n;
      out.task_grad[k] = g;
    }
    out.task = sum * inv_n;
  }
  if (!pairs.empty()) {
    out.has_sc = true;
    const double w = scenario.lambda_sc / static_cast<double>(pairs.size());
    out.pair_grad_i.resize(pairs.size());
    out.pair_grad_j.resize(pairs.size());
    double sum = 0.0;
    for (std::size_t k = 0; k < pairs.size(); ++k) {
      const auto& p = pairs[k];
      auto r = sc_loss_grad(p.pred_i, p.pred_j, p.odometry, p.subject_motion, scenario.convention);
      sum += r.value;
      for (int c = 0; c < 4; ++c) {
        out.pair_grad_i[k][c] = w * r.grad_i[c];
        out.pair_grad_j[k][c] = w * r.grad_j[c];
      }
    }
    out.sc = sum / static_cast<double>(pairs.size());
  }
  out.value = (out.has_task ? out.task : 0.0) + (out.has_sc ? scenario.lambda_sc * out.sc : 0.0);
  return out;
}

std::vector<ConsistencyPair> build_pairs(const PairSource& source, double dt, const LossScenario& scenario,
                                         std::uint64_t seed) {
  std::vector<ConsistencyPair> pairs;
  if (!scenario.has_sc()) return pairs;
  const double steps_f = dt * source.rate_hz;
  const long steps = std::lround(steps_f);
  if (steps <= 0 || std::abs(steps_f - static_cast<double>(steps)) > 1e-9) {
    throw ConfigError("dt = " + std::to_string(dt) + " s is not a positive multiple of the sample period 1/" +
                      std::to_string(source.rate_hz) + " s");
  }
  const bool noisy = scenario.sc_drone == DroneMode::noisy_odometry;
  if (noisy && source.drone_estimate.empty()) throw ConfigError("noisy odometry requested without estimates");
  const bool still_only = scenario.sc_set == SampleSet::still_subset;
  if (still_only && source.still_run.empty()) throw ConfigError("still-subset pairs requested without still detection");

  const auto n = static_cast<long>(source.frames.size());
  for (long k = 0; k + steps < n; ++k) {
    const int i = source.frames[static_cast<std::size_t>(k)];
    const int j = source.frames[static_cast<std::size_t>(k + steps)];
    if (still_only) {
      const int ri = source.still_run[static_cast<std::size_t>(i)];
      if (ri < 0 || ri != source.still_run[static_cast<std::size_t>(j)]) continue;
    }
    ConsistencyPair p;
    p.i = i;
    p.j = j;
    p.odometry = noisy ? compose(invert(source.drone_estimate[i]), source.drone_estimate[j])
                       : compose(invert(source.drone[i]), source.drone[j]);
    p.subject_motion = scenario.sc_subject == SubjectMode::unknown
                           ? Pose4::identity()
                           : compose(invert(source.subject[i]), source.subject[j]);
    pairs.push_back(p);
  }
  if (still_only && pairs.size() > static_cast<std::size_t>(scenario.sc_subset_size)) {
    std::mt19937_64 rng(seed);
    std::shuffle(pairs.begin(), pairs.end(), rng);
    pairs.resize(static_cast<std::size_t>(scenario.sc_subset_size));
    std::sort(pairs.begin(), pairs.end(), [](const auto& a, const auto& b) { return a.i < b.i; });
  }
  return pairs;
}

}  // namespace odl
