#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "svrt/checkpoint.hpp"
#include "svrt/dataset.hpp"
#include "svrt/model.hpp"

namespace svrt::train {

using nn::ModelConfig;
using nn::NamedTensor;

struct LrSchedule {
  double initial = 1e-3;
  /// 0-based epoch from which `later` applies.
  int switch_epoch = 70;
  double later = 1e-4;

  /// Rate at `epoch` when the sweep replaces `initial` with `base` (the ratio is kept).
  double at(int epoch, double base) const;

  friend bool operator==(const LrSchedule&, const LrSchedule&) = default;
};

struct RunConfig {
  int task_id = 1;
  ModelConfig model;
  int n_train = 2000;
  int n_val = 2000;
  int n_test = 2000;
  int epochs = 100;
  LrSchedule lr;
  std::vector<double> lr_sweep{1e-3, 1e-4, 1e-5};
  int n_restarts = 3;
  int batch_size = 32;
  std::uint64_t seed = 0;

  /// Throws ConfigError on an inconsistent configuration.
  void validate() const;

  friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

struct EpochRecord {
  int epoch = 0;
  double lr = 0.0;
  double train_loss = 0.0;
  double train_acc = 0.0;
  double val_acc = 0.0;

  friend bool operator==(const EpochRecord&, const EpochRecord&) = default;
};

struct RestartResult {
  std::uint64_t seed = 0;
  double lr = 0.0;
  double best_val_acc = 0.0;
  int best_epoch = -1;
  double test_acc = 0.0;
  int epochs_ran = 0;
  bool stopped_early = false;
  std::vector<EpochRecord> history;

  friend bool operator==(const RestartResult&, const RestartResult&) = default;
};

struct RunResult {
  RunConfig config;
  double best_val_acc = 0.0;
  double test_acc = 0.0;
  int epochs_ran = 0;
  bool stopped_early = false;
  /// Index into `restarts` of the selected run.
  int selected = 0;
  std::vector<EpochRecord> history;
  std::vector<RestartResult> restarts;
  std::int64_t parameter_count = 0;
  std::int64_t attention_parameter_count = 0;
  /// Set by finetune_frozen: backbone checksum before and after training.
  std::uint64_t frozen_checksum_before = 0;
  std::uint64_t frozen_checksum_after = 0;
  double wall_time = 0.0;
};

/// Images as [N, 1, size, size] floats plus labels.
struct Batch {
  nn::Tensor<float> x;
  std::vector<std::uint8_t> y;
};

struct TaskData {
  Batch train, val, test;
};

Batch to_batch(const io::Dataset& ds, int size);
/// Generates the three splits of `task` from one base seed (disjoint sample streams).
TaskData make_task_data(int task_id, int n_train, int n_val, int n_test, int size, std::uint64_t seed,
                        int threads = 1);

/// Called after every epoch of every restart.
using Progress = std::function<void(int restart, const EpochRecord&)>;

/// Trains one model per (lr in sweep, restart); selects by best validation accuracy (ties
/// to the earlier run) and reports that model's test accuracy at its best validation
/// epoch. A restart stops early when validation accuracy reaches exactly 1.
RunResult train(const RunConfig& cfg, const TaskData& data, const Progress& progress = {});

/// Reduced single-core settings: one learning rate, one restart, 15 epochs with the rate
/// switch at epoch 10, and a full-resolution first stage.
RunConfig desk_config(int task_id);

/// Accuracy of `model` on `b` in inference mode.
double evaluate(nn::Model<float>& model, const Batch& b);

struct PretrainConfig {
  ModelConfig model;
  int per_task = 200;
  int epochs = 100;
  LrSchedule lr;
  int batch_size = 32;
  /// Training stops once pool accuracy (inference mode) reaches this.
  double target_pool_acc = 1.0;
  /// Fresh held-out images drawn from all tasks, split evenly.
  int n_fresh = 2024;
  std::uint64_t seed = 0;
  int threads = 1;
};

struct PretrainResult {
  std::vector<NamedTensor> backbone;
  double pool_acc = 0.0;
  double fresh_acc = 0.0;
  int pool_size = 0;
  int epochs_ran = 0;
  std::vector<EpochRecord> history;
};

/// Pools per_task images from every task, permutes the labels across the pool and fits
/// them. `fresh_acc` is accuracy on new images against their true labels.
PretrainResult pretrain_shuffled(const PretrainConfig& cfg, const Progress& progress = {});

/// Loads `backbone` (every tensor except the classifier), freezes it and trains only the
/// classifier. An empty backbone keeps the random initialisation. Throws ConfigError
/// when shapes do not match cfg.model.
RunResult finetune_frozen(std::span<const NamedTensor> backbone, const RunConfig& cfg, const TaskData& data,
                          const Progress& progress = {});

struct SweepResult {
  std::vector<int> blocks;
  std::vector<int> tasks;
  /// table[b][t]: best validation accuracy for blocks[b] on tasks[t].
  std::vector<std::vector<double>> table;
  std::vector<double> mean_val;
  int best_block = 0;
};

/// One run per (block, task); best block by mean validation accuracy, ties to the shallower.
SweepResult placement_sweep(nn::AttentionConfig attention, std::span<const int> blocks, std::span<const int> tasks,
                            const RunConfig& base, const std::function<TaskData(int task)>& data);

/// Mean validation accuracy per block and the argmax (ties to the earlier entry).
int best_block(std::span<const double> mean_val, std::span<const int> blocks);

}  // namespace svrt::train
