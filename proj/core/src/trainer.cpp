#include "odl/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "odl/error.hpp"
#include "odl/metrics.hpp"
#include "odl/seed.hpp"

namespace odl {

void TrainConfig::validate() const {
  adam.validate();
  if (batch_size < 1) throw ConfigError("batch size must be >= 1");
  if (pretrain_epochs < 1 || finetune_epochs < 1) throw ConfigError("epochs must be >= 1");
  if (!(validation_fraction > 0.0 && validation_fraction < 1.0)) {
    throw ConfigError("validation fraction must lie in (0, 1)");
  }
  if (!(bn_momentum >= 0.0 && bn_momentum <= 1.0)) throw ConfigError("bn momentum must lie in [0, 1]");
  if (!(p_time_reverse >= 0.0 && p_time_reverse <= 1.0)) throw ConfigError("time-reversal probability out of range");
  augment.validate();
  finetune_augment.validate();
}

Tensor4<float> make_batch(std::span<const GrayImage* const> frames) {
  Tensor4<float> t;
  t.n = static_cast<int>(frames.size());
  t.shape = Shape3{1, kImageHeight, kImageWidth};
  t.data.resize(frames.size() * t.shape.elements());
  std::size_t off = 0;
  for (const GrayImage* img : frames) {
    if (img->width != kImageWidth || img->height != kImageHeight) throw ShapeError("frame is not 160x96");
    for (auto p : img->pixels) t.data[off++] = static_cast<float>(p) / 255.0f;
  }
  return t;
}

std::vector<Pose4> predict(const ModelParams<float>& params, const ArchDescriptor& arch,
                           std::span<const GrayImage> images, std::span<const int> indices, int batch_size) {
  std::vector<Pose4> out;
  out.reserve(indices.size());
  const auto none = UpdateStrategy::none();
  std::vector<const GrayImage*> frames;
  for (std::size_t start = 0; start < indices.size(); start += static_cast<std::size_t>(batch_size)) {
    const std::size_t end = std::min(indices.size(), start + static_cast<std::size_t>(batch_size));
    frames.clear();
    for (std::size_t k = start; k < end; ++k) frames.push_back(&images[static_cast<std::size_t>(indices[k])]);
    auto r = forward(params, arch, make_batch(frames), Mode::eval, none);
    out.insert(out.end(), r.predictions.begin(), r.predictions.end());
  }
  return out;
}

namespace {

void check_finite(double loss, const char* phase, int epoch) {
  if (!std::isfinite(loss)) {
    throw RunError(std::string(phase) + " diverged: non-finite loss in epoch " + std::to_string(epoch));
  }
}

}  // namespace

PretrainResult pretrain(const ArchDescriptor& arch, const TrainConfig& config, const Sequence& data,
                        const EpochCallback& on_epoch) {
  config.validate();
  arch.validate();
  const int n = static_cast<int>(data.size());
  if (n < 2) throw ConfigError("pretraining needs at least two labelled frames");
  const auto labels = data.relative_poses();

  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 split_rng(derive_seed(config.seed, {1}));
  std::shuffle(order.begin(), order.end(), split_rng);
  const int n_val = std::clamp(static_cast<int>(std::lround(config.validation_fraction * n)), 1, n - 1);
  std::vector<int> val(order.begin(), order.begin() + n_val);
  std::vector<int> train(order.begin() + n_val, order.end());
  std::sort(val.begin(), val.end());
  std::vector<Pose4> val_labels;
  for (int k : val) val_labels.push_back(labels[static_cast<std::size_t>(k)]);

  ModelParams<float> params(arch);
  init_uniform_fan_in(params, arch, derive_seed(config.seed, {2}));
  const auto strategy = UpdateStrategy::all_wb();
  const auto selected = strategy.selected_keys(arch);
  AdamState adam;
  PretrainResult result;
  result.best_val_mae = std::numeric_limits<double>::infinity();

  std::vector<GrayImage> aug_images;
  std::vector<const GrayImage*> frames;
  std::vector<Pose4> targets;
  for (int epoch = 1; epoch <= config.pretrain_epochs; ++epoch) {
    std::mt19937_64 rng(derive_seed(config.seed, {3, static_cast<std::uint64_t>(epoch)}));
    std::shuffle(train.begin(), train.end(), rng);
    double loss_sum = 0.0;
    std::size_t seen = 0;
    for (std::size_t start = 0; start < train.size(); start += static_cast<std::size_t>(config.batch_size)) {
      const std::size_t end = std::min(train.size(), start + static_cast<std::size_t>(config.batch_size));
      aug_images.clear();
      targets.clear();
      for (std::size_t k = start; k < end; ++k) {
        const auto idx = static_cast<std::size_t>(train[k]);
        auto a = augment(data.images[idx], labels[idx], config.augment,
                         derive_seed(config.seed, {4, static_cast<std::uint64_t>(epoch), idx}));
        aug_images.push_back(std::move(a.image));
        targets.push_back(a.label);
      }
      frames.clear();
      for (const auto& img : aug_images) frames.push_back(&img);
      auto fr = forward(params, arch, make_batch(frames), Mode::train, strategy, BnStats::batch);
      auto lg = task_loss_grad(fr.predictions, targets);
      check_finite(lg.value, "pretraining", epoch);
      auto grads = backward(params, arch, fr.cache, lg.grad, strategy);
      adam_step(params, grads, selected, adam, config.adam);
      apply_running_stats(params, fr.bn_batch_stats, config.bn_momentum);
      loss_sum += lg.value * static_cast<double>(end - start);
      seen += end - start;
    }
    EpochLog log;
    log.epoch = epoch;
    log.train_loss = loss_sum / static_cast<double>(seen);
    const auto preds = predict(params, arch, data.images, val);
    log.val_mae = mae(preds, val_labels).mean;
    check_finite(log.val_mae, "pretraining", epoch);
    result.history.push_back(log);
    if (log.val_mae < result.best_val_mae) {
      result.best_val_mae = log.val_mae;
      result.best_epoch = epoch;
      result.params = params;
    }
    if (on_epoch) on_epoch(log);
  }
  return result;
}

FinetuneResult finetune(const ModelParams<float>& init, const ArchDescriptor& arch, const TrainConfig& config,
                        const FinetuneData& data, const EpochCallback& on_epoch) {
  config.validate();
  arch.validate();
  init.check_against(arch);
  if (data.tasks.empty() && data.pairs.empty()) throw ConfigError("fine-tuning set is empty");
  if (data.sequence == nullptr) throw ContractViolation("fine-tuning data without a sequence");
  const Sequence& seq = *data.sequence;
  auto in_range = [&](int k) { return k >= 0 && static_cast<std::size_t>(k) < seq.size(); };
  for (const auto& t : data.tasks) {
    if (!in_range(t.index)) throw ContractViolation("task sample index out of range");
  }
  for (const auto& p : data.pairs) {
    if (!in_range(p.i) || !in_range(p.j)) throw ContractViolation("pair index out of range");
  }

  FinetuneResult result;
  result.params = init;
  auto& params = result.params;
  const auto& strategy = config.strategy;
  const auto selected = strategy.selected_keys(arch);
  const BnStats bn = resolve_bn_stats(config.bn_stats, arch, strategy);
  AdamState adam;

  AugmentParams photometric = config.finetune_augment;
  photometric.p_flip = 0.0;

  // Items: task samples first, then pairs; shuffled jointly every epoch.
  const std::size_t n_tasks = data.tasks.size();
  std::vector<std::size_t> items(n_tasks + data.pairs.size());
  std::iota(items.begin(), items.end(), std::size_t{0});

  std::vector<GrayImage> aug_images;
  std::vector<const GrayImage*> frames;
  std::vector<TaskTerm> task_terms;
  std::vector<PairTerm> pair_terms;
  std::vector<int> task_slot, pair_slot_i, pair_slot_j;
  std::vector<Pose4> task_targets;
  std::vector<ConsistencyPair> batch_pairs;

  for (int epoch = 1; epoch <= config.finetune_epochs; ++epoch) {
    std::mt19937_64 rng(derive_seed(config.seed, {10, static_cast<std::uint64_t>(epoch)}));
    std::shuffle(items.begin(), items.end(), rng);
    double loss_sum = 0.0;
    int batches = 0;
    for (std::size_t start = 0; start < items.size(); start += static_cast<std::size_t>(config.batch_size)) {
      const std::size_t end = std::min(items.size(), start + static_cast<std::size_t>(config.batch_size));
      aug_images.clear();
      task_targets.clear();
      batch_pairs.clear();
      task_slot.clear();
      pair_slot_i.clear();
      pair_slot_j.clear();
      for (std::size_t k = start; k < end; ++k) {
        const std::size_t item = items[k];
        const std::uint64_t s = derive_seed(config.seed, {11, static_cast<std::uint64_t>(epoch), item});
        if (item < n_tasks) {
          const auto& t = data.tasks[item];
          auto a = augment(seq.images[static_cast<std::size_t>(t.index)], t.target, config.finetune_augment, s);
          task_slot.push_back(static_cast<int>(aug_images.size()));
          aug_images.push_back(std::move(a.image));
          task_targets.push_back(a.label);
        } else {
          ConsistencyPair p = data.pairs[item - n_tasks];
          std::mt19937_64 prng(s);
          std::uniform_real_distribution<double> u01(0.0, 1.0);
          const bool reverse = u01(prng) < config.p_time_reverse;
          const bool flip = u01(prng) < config.finetune_augment.p_flip;
          if (reverse) p = time_reverse(p);
          if (flip) p = mirror_pair(p);
          for (int side = 0; side < 2; ++side) {
            const int idx = side == 0 ? p.i : p.j;
            auto a = augment_image(seq.images[static_cast<std::size_t>(idx)], photometric, derive_seed(s, {static_cast<std::uint64_t>(20 + side)}));
            (side == 0 ? pair_slot_i : pair_slot_j).push_back(static_cast<int>(aug_images.size()));
            aug_images.push_back(flip ? flip_horizontal(a.image) : std::move(a.image));
          }
          batch_pairs.push_back(p);
        }
      }
      frames.clear();
      for (const auto& img : aug_images) frames.push_back(&img);
      auto fr = forward(params, arch, make_batch(frames), Mode::train, strategy, bn);

      task_terms.clear();
      for (std::size_t t = 0; t < task_slot.size(); ++t) {
        task_terms.push_back({fr.predictions[static_cast<std::size_t>(task_slot[t])], task_targets[t]});
      }
      pair_terms.clear();
      for (std::size_t q = 0; q < batch_pairs.size(); ++q) {
        pair_terms.push_back({fr.predictions[static_cast<std::size_t>(pair_slot_i[q])],
                              fr.predictions[static_cast<std::size_t>(pair_slot_j[q])], batch_pairs[q].odometry,
                              batch_pairs[q].subject_motion});
      }
      const auto loss = combined_loss(config.scenario, task_terms, pair_terms);
      check_finite(loss.value, "fine-tuning", epoch);

      std::vector<std::array<double, 4>> upstream(aug_images.size(), {0.0, 0.0, 0.0, 0.0});
      for (std::size_t t = 0; t < task_slot.size(); ++t) upstream[static_cast<std::size_t>(task_slot[t])] = loss.task_grad[t];
      for (std::size_t q = 0; q < batch_pairs.size(); ++q) {
        auto& gi = upstream[static_cast<std::size_t>(pair_slot_i[q])];
        auto& gj = upstream[static_cast<std::size_t>(pair_slot_j[q])];
        for (int c = 0; c < 4; ++c) {
          gi[c] += loss.pair_grad_i[q][c];
          gj[c] += loss.pair_grad_j[q][c];
        }
      }
      if (!selected.empty()) {
        auto grads = backward(params, arch, fr.cache, upstream, strategy);
        adam_step(params, grads, selected, adam, config.adam);
      }
      if (bn == BnStats::batch) apply_running_stats(params, fr.bn_batch_stats, config.bn_momentum);
      loss_sum += loss.value;
      ++batches;
    }
    result.epoch_loss.push_back(loss_sum / batches);
    if (on_epoch) on_epoch({epoch, result.epoch_loss.back(), 0.0});
  }
  return result;
}

}  // namespace odl
