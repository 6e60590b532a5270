#include "svrt/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

#include "svrt/optim.hpp"
#include "svrt/rng.hpp"

namespace svrt::train {

using nn::Model;
using nn::Tensor;

double LrSchedule::at(int epoch, double base) const {
  if (epoch < switch_epoch) return base;
  return initial > 0.0 ? base * (later / initial) : later;
}

void RunConfig::validate() const {
  if (task_id < 1 || task_id > tasks::kNumTasks) throw ConfigError("task id must be in 1..23");
  if (n_train < 2 || n_train % 2) throw ConfigError("n_train must be even and >= 2");
  if (n_val < 2 || n_val % 2 || n_test < 2 || n_test % 2) throw ConfigError("n_val and n_test must be even and >= 2");
  if (epochs < 1) throw ConfigError("epochs must be >= 1");
  if (lr.switch_epoch >= epochs) throw ConfigError("switch epoch must be below the epoch count");
  if (lr_sweep.empty()) throw ConfigError("learning-rate sweep is empty");
  for (double v : lr_sweep)
    if (!(v >= 0.0) || !std::isfinite(v)) throw ConfigError("learning rates must be finite and >= 0");
  if (n_restarts < 1) throw ConfigError("n_restarts must be >= 1");
  if (batch_size < 2) throw ConfigError("batch size must be >= 2");
}

Batch to_batch(const io::Dataset& ds, int size) {
  const int n = static_cast<int>(ds.samples.size());
  Batch b{Tensor<float>({n, 1, size, size}), std::vector<std::uint8_t>(n)};
  const Eigen::Index plane = static_cast<Eigen::Index>(size) * size;
  for (int i = 0; i < n; ++i) {
    const io::FloatMap m = io::prepare(ds.samples[i].image, size);
    b.x.data().segment(i * plane, plane) = Eigen::Map<const Eigen::VectorXf>(m.data(), plane);
    b.y[i] = ds.samples[i].label;
  }
  return b;
}

TaskData make_task_data(int task_id, int n_train, int n_val, int n_test, int size, std::uint64_t seed, int threads) {
  auto split = [&](io::Split s, int n) {
    return to_batch(io::generate(task_id, s, static_cast<std::uint32_t>(n), seed, threads), size);
  };
  return {split(io::Split::Train, n_train), split(io::Split::Val, n_val), split(io::Split::Test, n_test)};
}

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

Batch gather(const Batch& src, std::span<const int> idx) {
  const int n = static_cast<int>(idx.size());
  nn::Shape shape = src.x.shape();
  shape[0] = n;
  const Eigen::Index row = src.x.size() / src.x.dim(0);
  Batch b{Tensor<float>(shape), std::vector<std::uint8_t>(n)};
  for (int i = 0; i < n; ++i) {
    b.x.data().segment(i * row, row) = src.x.data().segment(idx[i] * row, row);
    b.y[i] = src.y[idx[i]];
  }
  return b;
}

Batch slice(const Batch& src, int begin, int end) {
  std::vector<int> idx(end - begin);
  std::iota(idx.begin(), idx.end(), begin);
  return gather(src, idx);
}

int correct(const Tensor<float>& logits, std::span<const std::uint8_t> y) {
  int c = 0;
  for (Eigen::Index i = 0; i < logits.size(); ++i) c += (logits[i] > 0.0f) == (y[i] != 0);
  return c;
}

std::vector<typename Tensor<float>::Vec> snapshot(const Model<float>& m) {
  std::vector<typename Tensor<float>::Vec> s;
  for (const auto& p : m.params()) s.push_back(p.tensor->data());
  return s;
}

void restore(Model<float>& m, const std::vector<typename Tensor<float>::Vec>& s) {
  const auto& ps = m.params();
  for (std::size_t i = 0; i < ps.size(); ++i) ps[i].tensor->data() = s[i];
}

// Generic epoch loop. `step` consumes one mini-batch and returns (loss sum, correct);
// `validate` returns validation accuracy.
struct LoopHooks {
  std::function<std::pair<double, int>(std::span<const int>, double lr)> step;
  std::function<double()> validate;
  std::function<void()> on_best;
};

void run_epochs(int n, int epochs, int batch_size, const LrSchedule& schedule, double base_lr, std::uint64_t seed,
                const LoopHooks& hooks, RestartResult& rr, int restart, const Progress& progress,
                double stop_at = 1.0) {
  Rng order(child_seed(seed, 0x0bde));
  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  for (int epoch = 0; epoch < epochs; ++epoch) {
    const double lr = schedule.at(epoch, base_lr);
    order.shuffle(perm);
    double loss_sum = 0.0;
    int hits = 0, seen = 0;
    for (int begin = 0; begin < n; begin += batch_size) {
      const int end = std::min(n, begin + batch_size);
      if (end - begin < 2) break;  // batch statistics need two samples
      try {
        const auto [l, c] = hooks.step(std::span<const int>(perm).subspan(begin, end - begin), lr);
        if (!std::isfinite(l)) throw nn::NonFiniteError("non-finite loss");
        loss_sum += l;
        hits += c;
        seen += end - begin;
      } catch (const nn::NonFiniteError& e) {
        throw DivergedError(std::string(e.what()) + " at epoch " + std::to_string(epoch) + ", step " +
                            std::to_string(begin / batch_size));
      }
    }
    EpochRecord rec{epoch, lr, seen ? loss_sum / seen : 0.0, seen ? static_cast<double>(hits) / seen : 0.0,
                    hooks.validate()};
    rr.history.push_back(rec);
    rr.epochs_ran = epoch + 1;
    if (rr.best_epoch < 0 || rec.val_acc > rr.best_val_acc) {
      rr.best_val_acc = rec.val_acc;
      rr.best_epoch = epoch;
      hooks.on_best();
    }
    if (progress) progress(restart, rec);
    if (rec.val_acc >= stop_at) {
      rr.stopped_early = true;
      break;
    }
  }
}

// Runs every (lr, restart) pair and fills the selection fields of `out`.
void run_restarts(const RunConfig& cfg, RunResult& out,
                  const std::function<RestartResult(std::uint64_t seed, double lr, int index)>& one) {
  int index = 0;
  for (std::size_t li = 0; li < cfg.lr_sweep.size(); ++li)
    for (int r = 0; r < cfg.n_restarts; ++r, ++index)
      out.restarts.push_back(one(child_seed(child_seed(cfg.seed, li), r), cfg.lr_sweep[li], index));
  int best = 0;
  for (int i = 1; i < static_cast<int>(out.restarts.size()); ++i)
    if (out.restarts[i].best_val_acc > out.restarts[best].best_val_acc) best = i;
  const RestartResult& sel = out.restarts[best];
  out.selected = best;
  out.best_val_acc = sel.best_val_acc;
  out.test_acc = sel.test_acc;
  out.epochs_ran = sel.epochs_ran;
  out.stopped_early = sel.stopped_early;
  out.history = sel.history;
}

std::pair<double, int> sgd_step(Model<float>& model, nn::AdamState<float>& opt, const Batch& b, double lr) {
  model.zero_grad();
  const Tensor<float> logits = model.forward(b.x, true);
  const nn::LossResult<float> loss = nn::bce_with_logits(logits, b.y);
  model.backward(loss.grad);
  const auto params = model.trainable();
  nn::adam_step<float>(params, opt, lr);
  return {static_cast<double>(loss.loss) * b.y.size(), correct(logits, b.y)};
}

}  // namespace

double evaluate(Model<float>& model, const Batch& b) {
  const int n = b.x.dim(0);
  if (n == 0) return 0.0;
  constexpr int kChunk = 256;
  int hits = 0;
  for (int begin = 0; begin < n; begin += kChunk) {
    const Batch part = slice(b, begin, std::min(n, begin + kChunk));
    hits += correct(model.forward(part.x, false, false), part.y);
  }
  return static_cast<double>(hits) / n;
}

RunConfig desk_config(int task_id) {
  RunConfig c;
  c.task_id = task_id;
  c.model.first_stage_stride = 1;
  c.epochs = 15;
  c.lr.switch_epoch = 10;
  c.lr_sweep = {1e-3};
  c.n_restarts = 1;
  return c;
}

RunResult train(const RunConfig& cfg, const TaskData& data, const Progress& progress) {
  cfg.validate();
  const auto t0 = std::chrono::steady_clock::now();
  RunResult out;
  out.config = cfg;
  {
    const Model<float> probe(cfg.model, 0);
    out.parameter_count = probe.parameter_count();
    out.attention_parameter_count = probe.attention_parameter_count();
  }
  run_restarts(cfg, out, [&](std::uint64_t seed, double lr, int index) {
    Model<float> model(cfg.model, seed);
    nn::AdamState<float> opt;
    RestartResult rr;
    rr.seed = seed;
    rr.lr = lr;
    std::vector<typename Tensor<float>::Vec> best;
    LoopHooks hooks{
        [&](std::span<const int> idx, double step_lr) { return sgd_step(model, opt, gather(data.train, idx), step_lr); },
        [&] { return evaluate(model, data.val); }, [&] { best = snapshot(model); }};
    run_epochs(data.train.x.dim(0), cfg.epochs, cfg.batch_size, cfg.lr, lr, seed, hooks, rr, index, progress);
    restore(model, best);
    rr.test_acc = evaluate(model, data.test);
    return rr;
  });
  out.wall_time = seconds_since(t0);
  return out;
}

PretrainResult pretrain_shuffled(const PretrainConfig& cfg, const Progress& progress) {
  if (cfg.per_task < 2 || cfg.per_task % 2) throw ConfigError("per_task must be even and >= 2");
  if (cfg.epochs < 1) throw ConfigError("epochs must be >= 1");
  const int size = cfg.model.input_size;
  std::vector<Batch> parts;
  std::vector<Batch> fresh_parts;
  const int fresh_per_task = ((cfg.n_fresh + tasks::kNumTasks - 1) / tasks::kNumTasks + 1) / 2 * 2;
  for (int t = 1; t <= tasks::kNumTasks; ++t) {
    const std::uint64_t s = child_seed(cfg.seed, static_cast<std::uint64_t>(t));
    parts.push_back(to_batch(io::generate(t, io::Split::Train, cfg.per_task, s, cfg.threads), size));
    if (fresh_per_task > 0)
      fresh_parts.push_back(to_batch(io::generate(t, io::Split::Test, fresh_per_task, s, cfg.threads), size));
  }
  auto concat = [size](const std::vector<Batch>& ps) {
    int n = 0;
    for (const auto& p : ps) n += p.x.dim(0);
    Batch b{Tensor<float>({n, 1, size, size}), {}};
    Eigen::Index off = 0;
    for (const auto& p : ps) {
      b.x.data().segment(off, p.x.size()) = p.x.data();
      off += p.x.size();
      b.y.insert(b.y.end(), p.y.begin(), p.y.end());
    }
    return b;
  };
  Batch pool = concat(parts);
  const Batch fresh = concat(fresh_parts);
  Rng shuffler(child_seed(cfg.seed, 0x5a0f));
  shuffler.shuffle(pool.y);

  PretrainResult out;
  out.pool_size = pool.x.dim(0);
  const std::uint64_t seed = child_seed(cfg.seed, 0x9e7);
  Model<float> model(cfg.model, seed);
  nn::AdamState<float> opt;
  RestartResult rr;
  LrSchedule schedule = cfg.lr;
  if (schedule.switch_epoch >= cfg.epochs) schedule.switch_epoch = cfg.epochs;
  LoopHooks hooks{
      [&](std::span<const int> idx, double lr) { return sgd_step(model, opt, gather(pool, idx), lr); },
      [&] { return evaluate(model, pool); }, [] {}};
  run_epochs(out.pool_size, cfg.epochs, cfg.batch_size, schedule, schedule.initial, seed, hooks, rr, 0, progress,
             cfg.target_pool_acc);
  out.history = rr.history;
  out.epochs_ran = rr.epochs_ran;
  out.pool_acc = rr.history.back().val_acc;
  out.fresh_acc = evaluate(model, fresh);
  out.backbone = nn::model_state(model);
  return out;
}

RunResult finetune_frozen(std::span<const NamedTensor> backbone, const RunConfig& cfg, const TaskData& data,
                          const Progress& progress) {
  cfg.validate();
  const auto t0 = std::chrono::steady_clock::now();
  Model<float> base(cfg.model, child_seed(cfg.seed, 0xba5e));
  if (!backbone.empty()) nn::load_model_state(base, backbone, true);
  const std::vector<NamedTensor> state = nn::model_state(base);

  // The backbone is frozen and runs in inference mode, so its features are fixed.
  auto features = [&base](const Batch& b) {
    const int n = b.x.dim(0);
    constexpr int kChunk = 256;
    Tensor<float> f;
    for (int begin = 0; begin < n; begin += kChunk) {
      const Tensor<float> part = base.features(slice(b, begin, std::min(n, begin + kChunk)).x);
      if (f.empty()) f = Tensor<float>({n, part.dim(1)});
      f.data().segment(static_cast<Eigen::Index>(begin) * part.dim(1), part.size()) = part.data();
    }
    return f;
  };
  const Batch ftrain{features(data.train), data.train.y};
  const Batch fval{features(data.val), data.val.y};
  const Batch ftest{features(data.test), data.test.y};
  auto head_acc = [](Model<float>& m, const Batch& b) {
    return static_cast<double>(correct(m.head_forward(b.x, false), b.y)) / std::max(1, b.x.dim(0));
  };

  RunResult out;
  out.config = cfg;
  out.parameter_count = base.parameter_count();
  out.attention_parameter_count = base.attention_parameter_count();
  std::vector<std::pair<std::uint64_t, std::uint64_t>> checksums;
  run_restarts(cfg, out, [&](std::uint64_t seed, double lr, int index) {
    Model<float> model(cfg.model, seed);
    nn::load_model_state(model, state, true);
    model.freeze_backbone(true);
    const std::uint64_t before = model.backbone_checksum();
    nn::AdamState<float> opt;
    RestartResult rr;
    rr.seed = seed;
    rr.lr = lr;
    std::vector<typename Tensor<float>::Vec> best;
    LoopHooks hooks{[&](std::span<const int> idx, double step_lr) -> std::pair<double, int> {
                      const Batch b = gather(ftrain, idx);
                      model.zero_grad();
                      const Tensor<float> logits = model.head_forward(b.x);
                      const nn::LossResult<float> loss = nn::bce_with_logits(logits, b.y);
                      model.head_backward(loss.grad);
                      const auto params = model.trainable();
                      nn::adam_step<float>(params, opt, step_lr);
                      return {static_cast<double>(loss.loss) * b.y.size(), correct(logits, b.y)};
                    },
                    [&] { return head_acc(model, fval); }, [&] { best = snapshot(model); }};
    run_epochs(ftrain.x.dim(0), cfg.epochs, cfg.batch_size, cfg.lr, lr, seed, hooks, rr, index, progress);
    restore(model, best);
    rr.test_acc = head_acc(model, ftest);
    checksums.emplace_back(before, model.backbone_checksum());
    return rr;
  });
  out.frozen_checksum_before = checksums[out.selected].first;
  out.frozen_checksum_after = checksums[out.selected].second;
  for (const auto& [b, a] : checksums)
    if (b != a) out.frozen_checksum_after = a;
  out.wall_time = seconds_since(t0);
  return out;
}

int best_block(std::span<const double> mean_val, std::span<const int> blocks) {
  if (mean_val.empty() || mean_val.size() != blocks.size()) throw ConfigError("placement sweep needs >= 1 block");
  std::size_t best = 0;
  for (std::size_t i = 1; i < mean_val.size(); ++i)
    if (mean_val[i] > mean_val[best] || (mean_val[i] == mean_val[best] && blocks[i] < blocks[best])) best = i;
  return blocks[best];
}

SweepResult placement_sweep(nn::AttentionConfig attention, std::span<const int> blocks, std::span<const int> tasks,
                            const RunConfig& base, const std::function<TaskData(int task)>& data) {
  if (tasks.empty()) throw ConfigError("placement sweep needs at least one task");
  if (blocks.empty()) throw ConfigError("placement sweep needs at least one block");
  SweepResult out;
  out.blocks.assign(blocks.begin(), blocks.end());
  out.tasks.assign(tasks.begin(), tasks.end());
  out.table.assign(blocks.size(), std::vector<double>(tasks.size(), 0.0));
  for (std::size_t t = 0; t < tasks.size(); ++t) {
    const TaskData d = data(tasks[t]);
    for (std::size_t b = 0; b < blocks.size(); ++b) {
      RunConfig cfg = base;
      cfg.task_id = tasks[t];
      attention.insert_after_block = blocks[b];
      cfg.model = nn::insert_attention(base.model, attention);
      out.table[b][t] = train(cfg, d).best_val_acc;
    }
  }
  for (const auto& row : out.table)
    out.mean_val.push_back(std::accumulate(row.begin(), row.end(), 0.0) / static_cast<double>(row.size()));
  out.best_block = best_block(out.mean_val, out.blocks);
  return out;
}

}  // namespace svrt::train
