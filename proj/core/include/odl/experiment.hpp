#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "odl/dataset.hpp"
#include "odl/losses.hpp"
#include "odl/metrics.hpp"
#include "odl/trainer.hpp"

namespace odl {

struct ScenarioData {
  std::vector<TaskSample> tasks;
  std::vector<ConsistencyPair> pairs;
};

/// Task samples and pairs for `scenario` over an acquired fine-tune set.
/// Still-subset task labels are the relative pose at the start of the still
/// run (clipped to the segment) propagated with the scenario's task odometry.
/// Task samples and pairs are drawn independently. Throws AcquisitionError
/// when a still-subset selector finds no still frames.
ScenarioData build_scenario_data(const Sequence& seq, const Acquisition& acquisition, double acquisition_rate_hz,
                                 const LossScenario& scenario, std::uint64_t seed);

struct RunSpec {
  int subject = 0;
  int fold = 0;
  std::uint64_t seed = 0;
};

struct ExperimentPlan {
  std::vector<RunSpec> runs;

  /// subjects x folds runs with independent per-run seeds.
  static ExperimentPlan cross_validation(int subjects, int folds, std::uint64_t seed);
};

struct EvalMetrics {
  double mae = 0.0;      ///< per-component mean
  double mae_sum = 0.0;  ///< summed over components
  double r2 = 0.0;       ///< percent, mean over outputs
};

EvalMetrics evaluate(const ModelParams<float>& params, const ArchDescriptor& arch, const Sequence& seq,
                     std::span<const int> indices);

struct FinetuneOutcome {
  EvalMetrics baseline;  ///< pretrained model on the test frames
  EvalMetrics tuned;
  std::size_t tasks = 0;
  std::size_t pairs = 0;
  std::vector<double> epoch_loss;
  ModelParams<float> params;
};

/// Acquire, assemble the scenario, fine-tune and evaluate on the held-out
/// frames of the same sequence. `config.seed` is replaced by `seed`.
FinetuneOutcome run_finetune(const ModelParams<float>& pretrained, const ArchDescriptor& arch, const Sequence& seq,
                             const FinetuneSetSpec& acquisition, TrainConfig config, std::uint64_t seed);

struct RunRecord {
  RunSpec spec;
  bool ok = false;
  std::string error;
  std::vector<double> values;  ///< caller-defined columns
};

/// Runs `fn` for every plan entry on up to `jobs` threads and returns the
/// records in plan order. Exceptions are caught per run.
std::vector<RunRecord> run_plan(const ExperimentPlan& plan, const std::function<std::vector<double>(const RunSpec&)>& fn,
                                int jobs = 1);

/// Mean and 95% interval of column `column` over successful records.
MeanCi aggregate(const std::vector<RunRecord>& records, std::size_t column);

}  // namespace odl
