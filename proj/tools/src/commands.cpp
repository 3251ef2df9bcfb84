#include "odl_cli/commands.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <ostream>
#include <set>

#include "odl/cost_model.hpp"
#include "odl/error.hpp"
#include "odl/experiment.hpp"
#include "odl/seed.hpp"
#include "odl_cli/plot.hpp"
#include "odl_cli/table.hpp"

#ifndef ODL_VERSION
#define ODL_VERSION "0.0.0"
#endif

namespace fs = std::filesystem;

namespace odl::cli {

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

struct Context {
  const Config& config;
  fs::path out;
  std::ostream& log;
  std::mutex log_mutex;
  std::vector<std::string> files;  ///< relative to `out`, in write order

  void note(const std::string& msg) {
    std::lock_guard lock(log_mutex);
    log << msg << '\n' << std::flush;
  }

  std::string path(const std::string& rel) {
    files.push_back(rel);
    return (out / rel).string();
  }
};

struct Inputs {
  ArchDescriptor arch;
  ModelParams<float> pretrained;
  std::vector<Sequence> flights;
  std::vector<std::string> flight_names;
};

// Domain data, synthesized in memory from the config when no paths are given.
struct Domains {
  std::optional<Sequence> pretrain;
  std::vector<Sequence> flights;
};

Domains load_domains(Context& ctx, bool need_pretrain, bool need_flights) {
  const Config& c = ctx.config;
  Domains d;
  const bool synth_pre = need_pretrain && c.data.pretrain.empty();
  const bool synth_flights = need_flights && c.data.flights.empty();
  if (synth_pre || synth_flights) {
    ctx.note("synthesizing data (seed " + std::to_string(c.seed) + ")");
    auto s = synth_generate(c.synth, c.seed);
    if (synth_pre) d.pretrain = std::move(s.domain_a);
    if (synth_flights) d.flights = std::move(s.domain_b);
  }
  if (need_pretrain && !c.data.pretrain.empty()) d.pretrain = load_sequence(c.data.pretrain);
  if (need_flights && !c.data.flights.empty()) {
    for (const auto& dir : c.data.flights) d.flights.push_back(load_sequence(dir));
  }
  for (const auto& f : d.flights) {
    if (f.size() == 0) throw IngestionError("flight sequence is empty");
  }
  return d;
}

std::string flight_name(const Sequence& s, std::size_t k) {
  const std::string id = s.size() ? s.records[0].subject_id : std::string();
  return id.empty() ? "flight" + std::to_string(k) : id;
}

ModelParams<float> pretrain_and_save(Context& ctx, const ArchDescriptor& arch, const Sequence& data) {
  Table log{{"epoch", "train_loss", "val_mae"}, {}};
  ctx.note("pretraining " + std::to_string(ctx.config.train.pretrain_epochs) + " epochs on " +
           std::to_string(data.size()) + " samples");
  auto res = pretrain(arch, ctx.config.train, data, [&](const EpochLog& e) {
    ctx.note("  epoch " + std::to_string(e.epoch) + " loss " + num(e.train_loss) + " val_mae " + num(e.val_mae));
    log.add({std::to_string(e.epoch), num(e.train_loss), num(e.val_mae)});
  });
  log.write_csv(ctx.path("pretrain_log.csv"));
  save_checkpoint(ctx.path("checkpoint"), arch, res.params);
  ctx.note("best epoch " + std::to_string(res.best_epoch) + " val_mae " + num(res.best_val_mae));
  return std::move(res.params);
}

Inputs prepare(Context& ctx, bool need_flights) {
  const Config& c = ctx.config;
  Inputs in;
  in.arch = resolve_arch(c.arch);
  const bool inline_pretrain = c.checkpoint.empty();
  Domains d = load_domains(ctx, inline_pretrain, need_flights);
  if (inline_pretrain) {
    in.pretrained = pretrain_and_save(ctx, in.arch, *d.pretrain);
  } else {
    auto ck = load_checkpoint(c.checkpoint);
    if (!(ck.arch == in.arch)) throw ConfigError("checkpoint architecture differs from config arch '" + c.arch + "'");
    in.pretrained = std::move(ck.params);
  }
  in.flights = std::move(d.flights);
  for (std::size_t k = 0; k < in.flights.size(); ++k) in.flight_names.push_back(flight_name(in.flights[k], k));
  return in;
}

// One point of a sweep: how to acquire and train.
struct Point {
  std::string series;
  double x = 0;
  FinetuneSetSpec acquisition;
  TrainConfig train;
  bool feasible = true;
  std::string reason;
};

// Columns of the per-run table.
const std::vector<std::string> kRunHeader{"series", "x",          "subject", "fold", "seed",  "status", "baseline_mae",
                                          "mae",    "baseline_r2", "r2",     "tasks", "pairs", "error"};

struct PointResult {
  std::vector<RunRecord> records;
};

// Runs every point over the cross-validation plan. Run seeds are shared by
// all points so comparisons between points are paired.
void run_points(Context& ctx, const Inputs& in, const std::vector<Point>& points, Table& runs, Table& summary,
                const std::string& label) {
  const Config& c = ctx.config;
  const auto plan = ExperimentPlan::cross_validation(static_cast<int>(in.flights.size()), c.folds, c.seed);
  runs.header = kRunHeader;
  summary.header = {"series", "x", "n", "mean", "ci_low", "ci_high", "median", "baseline", "improvement_pct"};
  std::map<std::string, std::vector<RunRecord>> cache;
  for (std::size_t p = 0; p < points.size(); ++p) {
    const Point& pt = points[p];
    std::vector<RunRecord> records;
    if (!pt.feasible) {
      for (const auto& spec : plan.runs) records.push_back({spec, false, "infeasible: " + pt.reason, {}});
      ctx.note(label + " " + pt.series + " @ " + num(pt.x) + ": infeasible (" + pt.reason + ")");
    } else {
      // Scenarios without a consistency term do not depend on dt.
      std::string key;
      if (!pt.train.scenario.has_sc()) key = pt.series + "|" + num(pt.acquisition.segment_s) + "|" + num(pt.acquisition.rate_hz);
      if (!key.empty() && cache.count(key)) {
        records = cache[key];
      } else {
        ctx.note(label + " " + pt.series + " @ " + num(pt.x) + ": " + std::to_string(plan.runs.size()) + " runs");
        records = run_plan(
            plan,
            [&](const RunSpec& spec) {
              const auto o = run_finetune(in.pretrained, in.arch, in.flights[static_cast<std::size_t>(spec.subject)],
                                          pt.acquisition, pt.train, spec.seed);
              ctx.note("  subject " + std::to_string(spec.subject) + " fold " + std::to_string(spec.fold) +
                       ": baseline " + num(o.baseline.mae) + " -> " + num(o.tuned.mae));
              return std::vector<double>{o.baseline.mae, o.tuned.mae, o.baseline.r2, o.tuned.r2,
                                         static_cast<double>(o.tasks), static_cast<double>(o.pairs)};
            },
            c.jobs);
        if (!key.empty()) cache[key] = records;
      }
    }
    std::vector<double> tuned, base;
    for (const auto& r : records) {
      std::string status = r.ok ? "ok" : (r.error.rfind("infeasible", 0) == 0 ? "infeasible" : "failed");
      if (!r.ok && status == "failed") ctx.note("  run failed: " + r.error);
      const auto v = [&](std::size_t k) { return r.ok ? num(r.values[k]) : std::string("nan"); };
      runs.add({pt.series, num(pt.x), in.flight_names[static_cast<std::size_t>(r.spec.subject)],
                std::to_string(r.spec.fold), std::to_string(r.spec.seed), status, v(0), v(1), v(2), v(3),
                r.ok ? std::to_string(static_cast<long>(r.values[4])) : "0",
                r.ok ? std::to_string(static_cast<long>(r.values[5])) : "0", r.ok ? "" : r.error});
      if (r.ok) {
        base.push_back(r.values[0]);
        tuned.push_back(r.values[1]);
      }
    }
    if (tuned.empty()) {
      summary.add({pt.series, num(pt.x), "0", "nan", "nan", "nan", "nan", "nan", "nan"});
    } else {
      const auto ci = mean_ci95(tuned);
      const auto b = mean_ci95(base);
      summary.add({pt.series, num(pt.x), std::to_string(ci.n), num(ci.mean), num(ci.mean - ci.half_width),
                   num(ci.mean + ci.half_width), num(median(tuned)), num(b.mean),
                   num(100.0 * (b.mean - ci.mean) / b.mean)});
    }
  }
}

void emit(Context& ctx, const Table& runs, const Table& summary, const std::string& stem, const PlotSpec& spec) {
  runs.write_csv(ctx.path(stem + "_runs.csv"));
  const auto summary_path = ctx.path(stem + ".csv");
  summary.write_csv(summary_path);
  // The plot is rendered from the CSV on disk so it can be regenerated alone.
  render_svg_file(summary_path, ctx.path(stem + ".svg"), spec);
}

void cmd_synth(Context& ctx) {
  const Config& c = ctx.config;
  ctx.note("synthesizing " + std::to_string(c.synth.pretrain_samples) + " domain-A samples and " +
           std::to_string(c.synth.subjects) + " domain-B flights");
  const auto data = synth_generate(c.synth, c.seed);
  write_sequence(ctx.path("domain_a"), data.domain_a);
  for (std::size_t k = 0; k < data.domain_b.size(); ++k) {
    write_sequence(ctx.path("domain_b/" + flight_name(data.domain_b[k], k)), data.domain_b[k]);
  }
}

void cmd_pretrain(Context& ctx) {
  const Config& c = ctx.config;
  const auto arch = resolve_arch(c.arch);
  Domains d = load_domains(ctx, true, false);
  pretrain_and_save(ctx, arch, *d.pretrain);
}

void cmd_eval(Context& ctx) {
  Inputs in = prepare(ctx, true);
  Table t{{"flight", "samples", "mae", "mae_x", "mae_y", "mae_z", "mae_yaw", "r2_mean"}, {}};
  std::vector<R2Cell> cells;
  for (std::size_t k = 0; k < in.flights.size(); ++k) {
    const auto& seq = in.flights[k];
    std::vector<int> idx(seq.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = static_cast<int>(i);
    const auto pred = predict(in.pretrained, in.arch, seq.images, idx);
    const auto truth = seq.relative_poses();
    const auto m = mae(pred, truth);
    const auto r = r2(pred, truth);
    t.add({in.flight_names[k], std::to_string(seq.size()), num(m.mean), num(m.per_output[0]), num(m.per_output[1]),
           num(m.per_output[2]), num(m.per_output[3]), num(r.mean)});
    cells.push_back({"pretrained", in.flight_names[k], r});
    ctx.note(in.flight_names[k] + ": mae " + num(m.mean) + " r2 " + num(r.mean));
  }
  t.write_csv(ctx.path("eval.csv"));
  std::ofstream out(ctx.path("r2_matrix.csv"));
  write_r2_matrix(out, cells);
}

void cmd_finetune(Context& ctx) {
  const Config& c = ctx.config;
  Inputs in = prepare(ctx, true);
  if (static_cast<std::size_t>(c.subject) >= in.flights.size()) {
    throw ConfigError("subject " + std::to_string(c.subject) + " out of range (" + std::to_string(in.flights.size()) +
                      " flights)");
  }
  const auto& seq = in.flights[static_cast<std::size_t>(c.subject)];
  const auto run_seed = derive_seed(c.seed, {static_cast<std::uint64_t>(c.subject)});
  ctx.note("fine-tuning on " + in.flight_names[static_cast<std::size_t>(c.subject)] + " with " +
           c.train.strategy.name() + ", " + c.train.scenario.label);
  const auto o = run_finetune(in.pretrained, in.arch, seq, c.acquisition, c.train, run_seed);
  Table log{{"epoch", "loss"}, {}};
  for (std::size_t e = 0; e < o.epoch_loss.size(); ++e) log.add({std::to_string(e + 1), num(o.epoch_loss[e])});
  log.write_csv(ctx.path("finetune_log.csv"));
  Table m{{"stage", "mae", "mae_sum", "r2", "tasks", "pairs"}, {}};
  m.add({"baseline", num(o.baseline.mae), num(o.baseline.mae_sum), num(o.baseline.r2), "0", "0"});
  m.add({"finetuned", num(o.tuned.mae), num(o.tuned.mae_sum), num(o.tuned.r2), std::to_string(o.tasks),
         std::to_string(o.pairs)});
  m.write_csv(ctx.path("metrics.csv"));
  ctx.note("baseline mae " + num(o.baseline.mae) + " -> " + num(o.tuned.mae));

  // Cross-subject R2: the tuned model on every flight (held-out frames of
  // its own flight, all frames of the others).
  const auto acq = acquire_finetune_set(seq, c.acquisition, derive_seed(run_seed, {4}));
  std::vector<R2Cell> cells;
  for (std::size_t k = 0; k < in.flights.size(); ++k) {
    std::vector<int> idx;
    if (k == static_cast<std::size_t>(c.subject)) {
      idx = acq.test;
    } else {
      for (std::size_t i = 0; i < in.flights[k].size(); ++i) idx.push_back(static_cast<int>(i));
    }
    const auto pred = predict(o.params, in.arch, in.flights[k].images, idx);
    std::vector<Pose4> truth;
    for (int i : idx) truth.push_back(in.flights[k].records[static_cast<std::size_t>(i)].relative());
    cells.push_back({in.flight_names[static_cast<std::size_t>(c.subject)], in.flight_names[k], r2(pred, truth)});
  }
  {
    std::ofstream out(ctx.path("r2_matrix.csv"));
    write_r2_matrix(out, cells);
  }
  save_checkpoint(ctx.path("finetuned"), in.arch, o.params);
}

TrainConfig with(const TrainConfig& base, const UpdateStrategy& s, const LossScenario& sc) {
  TrainConfig t = base;
  t.strategy = s;
  t.scenario = sc;
  return t;
}

void cmd_sweep_acquisition(Context& ctx) {
  const Config& c = ctx.config;
  std::vector<Point> points;
  for (double rate : c.sweep.rates_hz) {
    for (int n : c.sweep.set_sizes) {
      Point p;
      p.series = num(rate) + " Hz";
      p.x = n;
      p.acquisition = c.acquisition;
      p.acquisition.rate_hz = rate;
      p.acquisition.max_samples = n;
      p.acquisition.segment_s = n / rate;
      p.train = with(c.train, UpdateStrategy::all_wb(), LossScenario::parse("t(a)", c.dt, c.lambda_sc));
      if (p.acquisition.segment_s > c.sweep.max_duration_s + 1e-9) {
        p.feasible = false;
        p.reason = num(p.acquisition.segment_s) + " s exceeds " + num(c.sweep.max_duration_s) + " s";
      }
      points.push_back(p);
    }
  }
  Inputs in = prepare(ctx, true);
  Table runs, summary;
  run_points(ctx, in, points, runs, summary, "sweep");
  emit(ctx, runs, summary, "sweep_acquisition",
       {"MAE vs fine-tuning set size", "samples", "MAE", true});
}

void cmd_compare_methods(Context& ctx) {
  const Config& c = ctx.config;
  std::vector<Point> points;
  for (const auto& name : c.methods.strategies) {
    for (int n : c.methods.set_sizes) {
      Point p;
      p.series = name;
      p.x = n;
      p.acquisition = c.acquisition;
      p.acquisition.max_samples = n;
      p.acquisition.segment_s = n / c.acquisition.rate_hz;
      p.train = with(c.train, UpdateStrategy::parse(name), LossScenario::parse("t(a)", c.dt, c.lambda_sc));
      points.push_back(p);
    }
  }
  Inputs in = prepare(ctx, true);
  Table runs, summary;
  run_points(ctx, in, points, runs, summary, "methods");
  emit(ctx, runs, summary, "compare_methods", {"MAE per update strategy", "samples", "MAE", true});
}

void cmd_loss_ladder(Context& ctx) {
  const Config& c = ctx.config;
  std::vector<Point> points;
  for (const auto& label : c.ladder.scenarios) {
    for (double dt : c.ladder.dt_s) {
      Point p;
      p.series = label;
      p.x = dt;
      p.acquisition = c.acquisition;
      p.train = with(c.train, c.train.strategy, LossScenario::parse(label, dt, c.lambda_sc));
      points.push_back(p);
    }
  }
  Inputs in = prepare(ctx, true);
  Table runs, summary;
  run_points(ctx, in, points, runs, summary, "ladder");
  emit(ctx, runs, summary, "loss_ladder", {"MAE per loss scenario", "dt [s]", "MAE", false});
}

void cmd_cost(Context& ctx) {
  const Config& c = ctx.config;
  const auto arch = resolve_arch(c.arch);
  Table t{{"method", "set_size", "params", "params_pct", "activation_kelem", "activation_bytes", "mask_bytes",
           "forward_mmac", "train_step_mmac"},
          {}};
  for (const auto& soc : c.cost.socs) t.header.push_back("time_s_" + soc.name);
  if (!arch.layers.empty()) {
    for (const auto& name : c.cost.strategies) {
      const auto s = UpdateStrategy::parse(name);
      const auto r = cost_report(arch, s);
      for (int n : c.cost.set_sizes) {
        std::vector<std::string> row{name,
                                     std::to_string(n),
                                     std::to_string(r.params_selected),
                                     num(std::round(r.params_percent * 1000) / 1000),
                                     num(static_cast<double>(r.footprint.activation_elements) / 1024.0),
                                     std::to_string(r.activation_bytes),
                                     std::to_string(r.footprint.mask_bytes),
                                     num(static_cast<double>(r.forward_macs) / 1e6),
                                     num(static_cast<double>(r.train_step_macs) / 1e6)};
        for (const auto& soc : c.cost.socs) {
          row.push_back(num(std::round(estimate_time(r.train_step_macs, static_cast<std::size_t>(n), c.cost.epochs, soc) * 10) / 10));
        }
        t.add(std::move(row));
      }
    }
  }
  t.write_csv(ctx.path("cost.csv"));
  std::ofstream txt(ctx.path("cost.txt"));
  t.write_text(txt);
  t.write_text(ctx.log);
}

void write_manifest(Context& ctx, const std::string& command) {
  nlohmann::json files = nlohmann::json::array();
  for (const auto& f : ctx.files) {
    const fs::path p = ctx.out / f;
    nlohmann::json e{{"path", f}};
    if (fs::is_regular_file(p)) e["bytes"] = fs::file_size(p);
    files.push_back(e);
  }
  const nlohmann::json m{{"tool", "odl"},
                         {"version", ODL_VERSION},
                         {"command", command},
                         {"seed", ctx.config.seed},
                         {"config_hash", config_hash(ctx.config.resolved)},
                         {"config", ctx.config.resolved},
                         {"outputs", files}};
  std::ofstream out(ctx.out / "manifest.json");
  out << m.dump(2) << '\n';
  if (!out) throw RunError("cannot write manifest in '" + ctx.out.string() + "'");
}

}  // namespace

const char* tool_version() { return ODL_VERSION; }

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const ConfigError*>(&e)) return kConfigFailure;
  if (dynamic_cast<const IngestionError*>(&e) || dynamic_cast<const ParameterCorruption*>(&e)) {
    return kIngestionFailure;
  }
  return kRunFailure;
}

const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names{"synth",           "pretrain",    "finetune", "eval", "sweep-acquisition",
                                              "compare-methods", "loss-ladder", "cost"};
  return names;
}

void run_command(const std::string& command, const Config& config, const std::string& out_dir, std::ostream& log) {
  const auto& names = command_names();
  if (std::find(names.begin(), names.end(), command) == names.end()) {
    throw ConfigError("unknown command '" + command + "'");
  }
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw RunError("cannot create output directory '" + out_dir + "': " + ec.message());
  Context ctx{config, fs::path(out_dir), log, {}, {}};
  if (command == "synth") cmd_synth(ctx);
  if (command == "pretrain") cmd_pretrain(ctx);
  if (command == "finetune") cmd_finetune(ctx);
  if (command == "eval") cmd_eval(ctx);
  if (command == "sweep-acquisition") cmd_sweep_acquisition(ctx);
  if (command == "compare-methods") cmd_compare_methods(ctx);
  if (command == "loss-ladder") cmd_loss_ladder(ctx);
  if (command == "cost") cmd_cost(ctx);
  write_manifest(ctx, command);
}

}  // namespace odl::cli
