#include <doctest.h>

#include "svrt/trainer.hpp"

using namespace svrt;
using namespace svrt::train;

namespace {

RunConfig quick(int task) {
  RunConfig c;
  c.task_id = task;
  c.model.depth_tier = nn::DepthTier::Tiny;
  c.model.block_channels = {4, 4, 8, 8};
  c.model.input_size = 32;
  c.n_train = 40;
  c.n_val = 20;
  c.n_test = 20;
  c.epochs = 3;
  c.lr.switch_epoch = 2;
  c.lr_sweep = {1e-3};
  c.n_restarts = 1;
  c.batch_size = 8;
  return c;
}

TaskData data_for(const RunConfig& c, std::uint64_t seed = 1) {
  return make_task_data(c.task_id, c.n_train, c.n_val, c.n_test, c.model.input_size, seed);
}

}  // namespace

TEST_CASE("learning-rate schedule") {
  const LrSchedule s{1e-3, 5, 1e-4};
  CHECK(s.at(0, 1e-3) == 1e-3);
  CHECK(s.at(4, 1e-3) == 1e-3);
  CHECK(s.at(5, 1e-3) == doctest::Approx(1e-4).epsilon(1e-12));
  CHECK(s.at(9, 1e-2) == doctest::Approx(1e-3).epsilon(1e-12));
  CHECK(s.at(3, 1e-2) == 1e-2);
}

TEST_CASE("configuration validation") {
  CHECK_NOTHROW(quick(1).validate());
  auto bad = [](auto edit) {
    RunConfig c = quick(1);
    edit(c);
    CHECK_THROWS_AS(c.validate(), ConfigError);
  };
  bad([](RunConfig& c) { c.task_id = 24; });
  bad([](RunConfig& c) { c.n_train = 41; });
  bad([](RunConfig& c) { c.n_test = 0; });
  bad([](RunConfig& c) { c.epochs = 0; });
  bad([](RunConfig& c) { c.lr.switch_epoch = 3; });
  bad([](RunConfig& c) { c.lr_sweep.clear(); });
  bad([](RunConfig& c) { c.lr_sweep = {-1e-3}; });
  bad([](RunConfig& c) { c.n_restarts = 0; });
  bad([](RunConfig& c) { c.batch_size = 1; });
  const RunConfig d = desk_config(5);
  CHECK(d.task_id == 5);
  CHECK(d.lr.switch_epoch < d.epochs);
  CHECK_NOTHROW(d.validate());
}

TEST_CASE("batches") {
  const io::Dataset ds = io::generate(2, io::Split::Train, 4, 3);
  const Batch b = to_batch(ds, 64);
  CHECK(b.x.shape() == nn::Shape{4, 1, 64, 64});
  CHECK(b.y == std::vector<std::uint8_t>{0, 1, 0, 1});
  CHECK(b.x.data().maxCoeff() == 0.5f);
  CHECK(b.x.data().minCoeff() == -0.5f);
  const TaskData d = make_task_data(2, 4, 6, 8, 32, 3);
  CHECK(d.train.x.dim(0) == 4);
  CHECK(d.val.x.dim(0) == 6);
  CHECK(d.test.x.dim(0) == 8);
  CHECK(d.train.x.data() != d.val.x.data().head(d.train.x.size()));
}

TEST_CASE("zero learning rate stays at chance") {
  RunConfig c = quick(1);
  c.lr_sweep = {0.0};
  c.epochs = 1;
  c.lr.switch_epoch = 0;
  c.n_test = 2000;
  const RunResult r = train::train(c, data_for(c));
  CHECK(r.test_acc == doctest::Approx(0.5).epsilon(0.1));
  CHECK(r.history.size() == 1);
  CHECK(r.history[0].lr == 0.0);
}

TEST_CASE("training is deterministic and reports its selection") {
  RunConfig c = quick(4);
  c.lr_sweep = {1e-3, 1e-4};
  c.n_restarts = 2;
  const TaskData d = data_for(c);
  std::vector<int> calls(4, 0);
  const RunResult a = train::train(c, d, [&](int restart, const EpochRecord&) { ++calls.at(restart); });
  const RunResult b = train::train(c, d);
  CHECK(a.restarts == b.restarts);
  CHECK(a.test_acc == b.test_acc);
  REQUIRE(a.restarts.size() == 4);
  for (int i = 0; i < 4; ++i) CHECK(calls[i] == a.restarts[i].epochs_ran);
  CHECK(a.restarts[0].lr == 1e-3);
  CHECK(a.restarts[3].lr == 1e-4);
  CHECK(a.restarts[0].seed != a.restarts[1].seed);
  for (int i = 0; i < 4; ++i) {
    CHECK(a.restarts[i].best_val_acc <= a.best_val_acc);
    if (a.restarts[i].best_val_acc == a.best_val_acc) CHECK(i >= a.selected);
  }
  const RestartResult& sel = a.restarts[a.selected];
  CHECK(a.test_acc == sel.test_acc);
  CHECK(a.history == sel.history);
  CHECK(sel.history[sel.best_epoch].val_acc == sel.best_val_acc);
  for (const auto& rr : a.restarts) {
    if (rr.stopped_early) CHECK(rr.best_val_acc == 1.0);
    else CHECK(rr.epochs_ran == c.epochs);
    CHECK(rr.history[0].lr == rr.lr);
    if (rr.epochs_ran > 2) CHECK(rr.history[2].lr == doctest::Approx(rr.lr * c.lr.later / c.lr.initial));
  }
  CHECK(a.parameter_count == nn::Model<float>(c.model, 0).parameter_count());
}

TEST_CASE("a separable task stops early") {
  RunConfig c = quick(4);
  c.model.block_channels = {16, 32, 64, 128};
  c.model.input_size = 64;
  c.n_train = 1000;
  c.epochs = 8;
  c.lr.switch_epoch = 7;
  c.batch_size = 16;
  const RunResult r = train::train(c, data_for(c, 2));
  CHECK(r.stopped_early);
  CHECK(r.best_val_acc == 1.0);
  CHECK(r.epochs_ran < c.epochs);
}

TEST_CASE("divergence is reported") {
  RunConfig c = quick(1);
  c.lr_sweep = {1e300};
  CHECK_THROWS_AS(train::train(c, data_for(c)), DivergedError);
}

TEST_CASE("shuffled pretraining and frozen fine-tuning") {
  PretrainConfig p;
  p.model = quick(1).model;
  p.per_task = 2;
  p.epochs = 2;
  p.n_fresh = 46;
  p.batch_size = 8;
  const PretrainResult a = pretrain_shuffled(p);
  const PretrainResult b = pretrain_shuffled(p);
  CHECK(a.pool_size == 46);
  CHECK(a.epochs_ran == 2);
  CHECK(a.history == b.history);
  CHECK(nn::encode_checkpoint(a.backbone) == nn::encode_checkpoint(b.backbone));
  CHECK(a.pool_acc == a.history.back().val_acc);
  CHECK(a.fresh_acc >= 0.0);
  CHECK(a.fresh_acc <= 1.0);
  p.per_task = 3;
  CHECK_THROWS_AS(pretrain_shuffled(p), ConfigError);

  RunConfig c = quick(2);
  c.lr_sweep = {1e-3, 1e-4};
  const RunResult f = finetune_frozen(a.backbone, c, data_for(c));
  CHECK(f.frozen_checksum_before == f.frozen_checksum_after);
  nn::Model<float> m(c.model, 0);
  nn::load_model_state(m, a.backbone, true);
  CHECK(f.frozen_checksum_before == m.backbone_checksum());
  CHECK(f.restarts.size() == 2);

  RunConfig wrong = c;
  wrong.model.block_channels = {8, 8, 8, 8};
  CHECK_THROWS_AS(finetune_frozen(a.backbone, wrong, data_for(c)), ConfigError);
}

TEST_CASE("attention placement sweep") {
  RunConfig base = quick(1);
  base.epochs = 1;
  base.lr.switch_epoch = 0;
  nn::AttentionConfig att = nn::AttentionConfig::defaults(nn::AttentionKind::SAM);
  att.d = 4;
  att.n_heads = 1;
  const std::vector<int> blocks{1, 2}, task_ids{1, 4};
  auto data = [&](int t) {
    RunConfig c = base;
    c.task_id = t;
    return data_for(c);
  };
  const SweepResult a = placement_sweep(att, blocks, task_ids, base, data);
  const SweepResult b = placement_sweep(att, blocks, task_ids, base, data);
  CHECK(a.table == b.table);
  REQUIRE(a.table.size() == 2);
  CHECK(a.table[0].size() == 2);
  CHECK(a.mean_val[1] == doctest::Approx((a.table[1][0] + a.table[1][1]) / 2));
  CHECK(a.best_block == best_block(a.mean_val, a.blocks));

  const std::vector<double> tied{0.7, 0.9, 0.9};
  CHECK(best_block(tied, std::vector<int>{1, 2, 3}) == 2);
  CHECK(best_block(tied, std::vector<int>{1, 4, 3}) == 3);
  CHECK_THROWS_AS(best_block({}, {}), ConfigError);
  CHECK_THROWS_AS(placement_sweep(att, blocks, {}, base, data), ConfigError);
}
