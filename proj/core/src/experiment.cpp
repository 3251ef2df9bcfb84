#include "odl/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <random>
#include <thread>

#include "odl/error.hpp"
#include "odl/seed.hpp"

namespace odl {

ScenarioData build_scenario_data(const Sequence& seq, const Acquisition& acq, double acquisition_rate_hz,
                                 const LossScenario& scenario, std::uint64_t seed) {
  ScenarioData out;
  const auto drone = seq.drone_poses();
  const auto subject = seq.subject_poses();
  const auto estimate = seq.odometry_poses();
  const bool need_still = scenario.task_set == SampleSet::still_subset || scenario.sc_set == SampleSet::still_subset;

  // Still runs are clipped to the segment: the known position is where the
  // subject stood when (or after) the fine-tuning flight began.
  std::vector<int> runs;
  if (need_still) {
    std::vector<int> still;
    const int lo = acq.segment_start, hi = acq.segment_start + acq.segment_length;
    for (int k : detect_still(subject, seq.rate_hz())) {
      if (k >= lo && k < hi) still.push_back(k);
    }
    runs = still_runs(still, seq.size());
  }

  if (scenario.task_set == SampleSet::all) {
    for (int k : acq.finetune) out.tasks.push_back({k, seq.records[static_cast<std::size_t>(k)].relative(), true});
  } else if (scenario.task_set == SampleSet::still_subset) {
    if (scenario.task_drone == DroneMode::noisy_odometry && estimate.empty()) {
      throw ConfigError("noisy odometry requested but the sequence has no odometry columns");
    }
    std::vector<int> candidates;
    for (int k : acq.finetune) {
      if (runs[static_cast<std::size_t>(k)] >= 0) candidates.push_back(k);
    }
    if (candidates.empty()) throw AcquisitionError("no still frames in the fine-tuning segment");
    std::mt19937_64 rng(derive_seed(seed, {1}));
    std::shuffle(candidates.begin(), candidates.end(), rng);
    if (candidates.size() > static_cast<std::size_t>(scenario.task_subset_size)) {
      candidates.resize(static_cast<std::size_t>(scenario.task_subset_size));
    }
    std::sort(candidates.begin(), candidates.end());
    for (int k : candidates) {
      int start = k;
      while (start > 0 && runs[static_cast<std::size_t>(start - 1)] == runs[static_cast<std::size_t>(k)]) --start;
      const auto& known = seq.records[static_cast<std::size_t>(start)].relative();
      const bool noisy = scenario.task_drone == DroneMode::noisy_odometry;
      const Pose4 odom = noisy ? compose(invert(estimate[static_cast<std::size_t>(start)]), estimate[static_cast<std::size_t>(k)])
                               : compose(invert(drone[static_cast<std::size_t>(start)]), drone[static_cast<std::size_t>(k)]);
      out.tasks.push_back({k, propagate_target(known, odom), true});
    }
  }

  if (scenario.has_sc()) {
    PairSource src;
    src.rate_hz = acquisition_rate_hz;
    src.frames = acq.finetune;
    src.drone = drone;
    src.drone_estimate = estimate;
    src.subject = subject;
    src.still_run = runs;
    out.pairs = build_pairs(src, scenario.dt, scenario, derive_seed(seed, {2}));
    if (scenario.sc_set == SampleSet::still_subset && out.pairs.empty()) {
      throw AcquisitionError("no still pairs in the fine-tuning segment");
    }
  }
  if (out.tasks.empty() && out.pairs.empty()) throw AcquisitionError("scenario yields an empty fine-tuning set");
  return out;
}

ExperimentPlan ExperimentPlan::cross_validation(int subjects, int folds, std::uint64_t seed) {
  if (subjects < 1 || folds < 1) throw ConfigError("plan needs at least one subject and one fold");
  ExperimentPlan plan;
  for (int s = 0; s < subjects; ++s) {
    for (int f = 0; f < folds; ++f) {
      plan.runs.push_back({s, f, derive_seed(seed, {static_cast<std::uint64_t>(s), static_cast<std::uint64_t>(f)})});
    }
  }
  return plan;
}

EvalMetrics evaluate(const ModelParams<float>& params, const ArchDescriptor& arch, const Sequence& seq,
                     std::span<const int> indices) {
  const auto preds = predict(params, arch, seq.images, indices);
  std::vector<Pose4> targets;
  targets.reserve(indices.size());
  for (int k : indices) targets.push_back(seq.records[static_cast<std::size_t>(k)].relative());
  const auto m = mae(preds, targets);
  return {m.mean, m.sum, r2(preds, targets).mean};
}

FinetuneOutcome run_finetune(const ModelParams<float>& pretrained, const ArchDescriptor& arch, const Sequence& seq,
                             const FinetuneSetSpec& acquisition, TrainConfig config, std::uint64_t seed) {
  config.seed = derive_seed(seed, {3});
  config.validate();
  // The segment depends on the seed only, so every scenario and strategy of
  // one run sees the same frames.
  const Acquisition acq = acquire_finetune_set(seq, acquisition, derive_seed(seed, {4}));
  const ScenarioData sd = build_scenario_data(seq, acq, acquisition.rate_hz, config.scenario, derive_seed(seed, {5}));
  FinetuneData data{&seq, sd.tasks, sd.pairs};
  FinetuneOutcome out;
  out.tasks = sd.tasks.size();
  out.pairs = sd.pairs.size();
  out.baseline = evaluate(pretrained, arch, seq, acq.test);
  auto ft = finetune(pretrained, arch, config, data);
  out.tuned = evaluate(ft.params, arch, seq, acq.test);
  out.epoch_loss = std::move(ft.epoch_loss);
  out.params = std::move(ft.params);
  return out;
}

std::vector<RunRecord> run_plan(const ExperimentPlan& plan, const std::function<std::vector<double>(const RunSpec&)>& fn,
                                int jobs) {
  std::vector<RunRecord> records(plan.runs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t k = next++; k < plan.runs.size(); k = next++) {
      RunRecord& r = records[k];
      r.spec = plan.runs[k];
      try {
        r.values = fn(r.spec);
        r.ok = true;
      } catch (const std::exception& e) {
        r.ok = false;
        r.error = e.what();
      }
    }
  };
  const int n = std::max(1, std::min<int>(jobs, static_cast<int>(plan.runs.size())));
  if (n == 1) {
    worker();
    return records;
  }
  std::vector<std::thread> pool;
  for (int t = 0; t < n; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  return records;
}

MeanCi aggregate(const std::vector<RunRecord>& records, std::size_t column) {
  std::vector<double> v;
  for (const auto& r : records) {
    if (r.ok && column < r.values.size()) v.push_back(r.values[column]);
  }
  return mean_ci95(v);
}

}  // namespace odl
