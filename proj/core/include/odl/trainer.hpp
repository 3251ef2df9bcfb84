#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "odl/arch.hpp"
#include "odl/dataset.hpp"
#include "odl/image.hpp"
#include "odl/losses.hpp"
#include "odl/network.hpp"
#include "odl/optimizer.hpp"
#include "odl/params.hpp"
#include "odl/strategy.hpp"

namespace odl {

struct TrainConfig {
  AdamConfig adam;
  int batch_size = 32;
  int pretrain_epochs = 100;
  int finetune_epochs = 5;
  double validation_fraction = 0.1;  ///< of the pretraining set
  UpdateStrategy strategy = UpdateStrategy::all_wb();
  LossScenario scenario = LossScenario::parse("t(a)");
  BnStats bn_stats = BnStats::automatic;
  double bn_momentum = 0.1;
  AugmentParams augment;           ///< pretraining
  AugmentParams finetune_augment;  ///< fine-tuning, applied per frame (flip per pair)
  double p_time_reverse = 0.5;
  std::uint64_t seed = 0;

  /// Throws ConfigError.
  void validate() const;
};

struct EpochLog {
  int epoch = 0;
  double train_loss = 0.0;
  double val_mae = 0.0;  ///< pretraining only
};

using EpochCallback = std::function<void(const EpochLog&)>;

struct PretrainResult {
  ModelParams<float> params;  ///< best validation checkpoint
  int best_epoch = 0;
  double best_val_mae = 0.0;
  std::vector<EpochLog> history;
};

/// Supervised L1 training of every parameter from a fan-in initialisation,
/// keeping the epoch with the lowest validation MAE. Throws RunError on a
/// non-finite loss.
PretrainResult pretrain(const ArchDescriptor& arch, const TrainConfig& config, const Sequence& data,
                        const EpochCallback& on_epoch = {});

struct FinetuneData {
  const Sequence* sequence = nullptr;
  std::vector<TaskSample> tasks;
  std::vector<ConsistencyPair> pairs;
};

struct FinetuneResult {
  ModelParams<float> params;  ///< after the final epoch
  std::vector<double> epoch_loss;
};

/// Minimises the combined loss for `finetune_epochs`, updating only the
/// strategy's tensors. Task samples and pairs are shuffled together each
/// epoch and consumed `batch_size` items at a time. Throws ConfigError when
/// both sets are empty.
FinetuneResult finetune(const ModelParams<float>& init, const ArchDescriptor& arch, const TrainConfig& config,
                        const FinetuneData& data, const EpochCallback& on_epoch = {});

/// Eval-mode predictions for the frames at `indices` of `images`.
std::vector<Pose4> predict(const ModelParams<float>& params, const ArchDescriptor& arch,
                           std::span<const GrayImage> images, std::span<const int> indices, int batch_size = 64);

/// Pixels scaled to [0, 1], NCHW with one channel.
Tensor4<float> make_batch(std::span<const GrayImage* const> frames);

}  // namespace odl
