// End-to-end acceptance checks. One line per criterion on stdout, progress on stderr.
//
//   acceptance [N ...] [--write-golden] [--runs DIR] [--threads K] [--summary FILE]

#include <algorithm>
#include <chrono>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "../nn_helpers.hpp"
#include "../oracles.hpp"
#include "svrt/attention.hpp"
#include "svrt/checkpoint.hpp"
#include "svrt/dataset.hpp"
#include "svrt/layers.hpp"
#include "svrt/model.hpp"
#include "svrt/records.hpp"
#include "svrt/tasks.hpp"
#include "svrt/taxonomy.hpp"
#include "svrt/trainer.hpp"

namespace fs = std::filesystem;
using namespace svrt;
using testing::probe;
using testing::randn;
using testing::T64;

namespace {

// ---------------------------------------------------------------- settings

constexpr int kScenesPerLabel = 1000;
constexpr int kGoldenCount = 100;
constexpr std::uint64_t kGoldenSeed = 2024;
constexpr int kOracleInstances = 200;

constexpr int kSeeds = 3;
const std::vector<int> kSpatialTasks{2, 3, 4, 11};
constexpr int kSameDifferentTask = 21;
constexpr int kEvalCount = 1000;

constexpr int kAttnTask = 1;
constexpr int kAttnTrain = 1000;
constexpr int kAttnD = 64;

constexpr int kPretrainPerTask = 100;
constexpr int kPretrainEpochs = 60;
constexpr int kPretrainSwitch = 45;

struct Options {
  std::set<int> only;
  bool write_golden = false;
  fs::path runs = fs::temp_directory_path() / "svrt_acceptance";
  fs::path summary;
  int threads = 1;
};

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

std::string hex(std::uint64_t v) { return fmt("%016" PRIx64, v); }

void progress(const std::string& s) {
  std::fprintf(stderr, "  %s\n", s.c_str());
  std::fflush(stderr);
}

// ---------------------------------------------------------------- golden checksums

class Golden {
 public:
  explicit Golden(fs::path path) : path_(std::move(path)) {
    std::ifstream in(path_);
    std::string key, value;
    while (in >> key >> value) values_[key] = value;
  }

  /// Empty when absent.
  std::string get(const std::string& key) const {
    const auto it = values_.find(key);
    return it == values_.end() ? std::string() : it->second;
  }

  void set(const std::string& key, const std::string& value) { values_[key] = value; }

  void save() const {
    std::ostringstream out;
    for (const auto& [k, v] : values_) out << k << ' ' << v << '\n';
    io::write_atomic(path_, out.str());
  }

 private:
  fs::path path_;
  std::map<std::string, std::string> values_;
};

std::uint64_t dataset_checksum(int task, int threads) {
  return fnv1a64(io::pack(io::generate(task, io::Split::Train, kGoldenCount, kGoldenSeed, threads)));
}

std::vector<std::uint8_t> reference_checkpoint() {
  return nn::encode_checkpoint(nn::model_state(nn::Model<float>(nn::ModelConfig{}, 0)));
}

// ---------------------------------------------------------------- 1: generator soundness

Outcome generator_soundness(const Options& opt, Golden& golden) {
  std::vector<int> wrong(tasks::kNumTasks, 0);
  io::parallel_for(tasks::kNumTasks, opt.threads, [&](std::size_t i) {
    const int task = static_cast<int>(i) + 1;
    for (int label = 0; label < 2; ++label)
      for (int s = 0; s < kScenesPerLabel; ++s) {
        const auto scene = tasks::sample_scene(task, label, static_cast<std::uint64_t>(s) * 2 + label);
        if (tasks::verify(scene) != label || !tasks::within_frame(scene)) ++wrong[i];
      }
  });
  const int bad_scenes = std::accumulate(wrong.begin(), wrong.end(), 0);
  progress(fmt("%d scenes failed verification", bad_scenes));

  int unstable = 0, mismatched = 0, missing = 0;
  const int many = std::max(2, opt.threads);
  for (int task = 1; task <= tasks::kNumTasks; ++task) {
    const std::uint64_t a = dataset_checksum(task, 1), b = dataset_checksum(task, many);
    if (a != b) ++unstable;
    const std::string key = fmt("dataset.task%02d", task);
    if (opt.write_golden) golden.set(key, hex(a));
    const std::string want = golden.get(key);
    if (want.empty()) ++missing;
    else if (want != hex(a)) ++mismatched;
  }
  const bool pass = bad_scenes == 0 && unstable == 0 && mismatched == 0 && missing == 0;
  return {pass, fmt("%d/%d scenes verified; datasets unstable across threads %d, golden mismatches %d, missing %d",
                    2 * kScenesPerLabel * tasks::kNumTasks - bad_scenes, 2 * kScenesPerLabel * tasks::kNumTasks,
                    unstable, mismatched, missing)};
}

// ---------------------------------------------------------------- 2: geometry oracles

Outcome geometry_oracles(const Options& opt) {
  Rng rng(17);
  int contain_ok = 0, contain_skip = 0, contain_yes = 0;
  for (int checked = 0; checked < kOracleInstances;) {
    const auto outer = oracle::random_placed(rng, 20.0, 45.0);
    const bool nested = rng.coin();
    const auto inner = nested ? oracle::random_placed(rng, 3.0, 15.0,
                                                      outer.transform.translation +
                                                          geom::Point(rng.uniform(-15, 15), rng.uniform(-15, 15)))
                              : oracle::random_placed(rng, 3.0, 15.0);
    const auto truth = oracle::flood_fill_contains(outer.image_points(), inner.image_points());
    if (truth == oracle::Inside::Ambiguous) {
      ++contain_skip;
      continue;
    }
    ++checked;
    contain_yes += truth == oracle::Inside::Yes;
    contain_ok += geom::contains(outer, inner) == (truth == oracle::Inside::Yes);
  }
  progress(fmt("contains: %d/%d agree (%d inside, %d ambiguous skipped)", contain_ok, kOracleInstances, contain_yes,
               contain_skip));

  std::vector<std::pair<geom::Points, geom::Points>> pairs;
  for (int i = 0; i < kOracleInstances; ++i) {
    auto a = oracle::random_placed(rng, 8.0, 30.0).image_points();
    auto b = oracle::random_placed(rng, 8.0, 30.0).image_points();
    pairs.emplace_back(std::move(a), std::move(b));
  }
  std::vector<double> gaps(pairs.size());
  io::parallel_for(pairs.size(), opt.threads, [&](std::size_t i) {
    gaps[i] = std::abs(geom::border_distance(pairs[i].first, pairs[i].second) -
                       oracle::dense_border_distance(pairs[i].first, pairs[i].second));
  });
  const double worst_gap = *std::max_element(gaps.begin(), gaps.end());
  progress(fmt("border distance: worst deviation from dense sampling %.4f px", worst_gap));

  int sym_ok = 0, sym_skip = 0, sym_yes = 0;
  for (int checked = 0; checked < kOracleInstances;) {
    const auto shapes = oracle::symmetry_scene(rng, rng.coin());
    const double err = oracle::symmetry_error(shapes);
    if (err > 0.75 && err < 3.0) {
      ++sym_skip;
      continue;
    }
    ++checked;
    sym_yes += err <= 1.5;
    sym_ok += geom::symmetric_arrangement(std::span<const geom::Points>(shapes), 1.5) == (err <= 1.5);
  }
  progress(fmt("symmetry: %d/%d agree (%d symmetric, %d ambiguous skipped)", sym_ok, kOracleInstances, sym_yes,
               sym_skip));

  const bool pass = contain_ok == kOracleInstances && worst_gap <= 0.1 && sym_ok == kOracleInstances &&
                    contain_yes > 0 && contain_yes < kOracleInstances && sym_yes > 0 && sym_yes < kOracleInstances;
  return {pass, fmt("contains %d/%d, border distance worst %.4f px, symmetry %d/%d", contain_ok, kOracleInstances,
                    worst_gap, sym_ok, kOracleInstances)};
}

// ---------------------------------------------------------------- 3: gradients and attention identities

double gc(std::vector<nn::GradTarget> targets, const std::function<double()>& loss,
          const std::function<std::vector<T64>()>& analytic, std::size_t max_coords = 0, std::uint64_t seed = 0) {
  nn::GradCheckOptions o;
  o.throw_on_mismatch = false;
  o.max_coords = max_coords;
  o.seed = seed;
  return nn::grad_check(targets, loss, analytic, o).max_rel_error;
}

std::map<std::string, double> layer_errors() {
  using namespace nn;
  std::map<std::string, double> err;
  Rng rng(31);
  for (int stride : {1, 2}) {
    T64 x = randn({2, 3, 5, 5}, rng), w = randn({4, 3, 3, 3}, rng), b = randn({4}, rng);
    const T64 r = randn(conv2d_forward(x, w, b, stride, 1).shape(), rng);
    err[fmt("conv stride %d", stride)] = gc(
        {{"x", &x}, {"w", &w}, {"b", &b}}, [&] { return probe(conv2d_forward(x, w, b, stride, 1), r); },
        [&] {
          auto g = conv2d_backward(x, w, r, stride, 1);
          return std::vector<T64>{g.dx, g.dw, g.db};
        });
  }
  T64 x = randn({2, 3, 4, 4}, rng), other = randn({2, 3, 4, 4}, rng);
  const T64 r = randn({2, 3, 4, 4}, rng);
  err["relu"] = gc({{"x", &x}}, [&] { return probe(relu_forward(x), r); },
                   [&] { return std::vector<T64>{relu_backward(relu_forward(x), r)}; });
  err["sigmoid"] = gc({{"x", &x}}, [&] { return probe(sigmoid_forward(x), r); },
                      [&] { return std::vector<T64>{sigmoid_backward(sigmoid_forward(x), r)}; });
  err["residual add"] = gc({{"a", &x}, {"b", &other}}, [&] { return probe(residual_add(x, other), r); },
                           [&] { return std::vector<T64>{r, r}; });
  const T64 rg = randn({2, 3}, rng);
  err["global average pool"] = gc({{"x", &x}}, [&] { return probe(global_avg_pool_forward(x), rg); },
                                  [&] { return std::vector<T64>{global_avg_pool_backward(x.shape(), rg)}; });
  const T64 rp = randn({2, 3, 2, 2}, rng);
  err["max pool"] = gc({{"x", &x}}, [&] { return probe(max_pool_forward(x, 2, 2).y, rp); },
                       [&] {
                         const auto f = max_pool_forward(x, 2, 2);
                         return std::vector<T64>{max_pool_backward(x.shape(), f.argmax, rp)};
                       });

  T64 lx = randn({5, 4}, rng), lw = randn({3, 4}, rng), lb = randn({3}, rng);
  const T64 lr = randn({5, 3}, rng);
  err["linear"] = gc({{"x", &lx}, {"w", &lw}, {"b", &lb}}, [&] { return probe(linear_forward(lx, lw, lb), lr); },
                     [&] {
                       auto g = linear_backward(lx, lw, lr);
                       return std::vector<T64>{g.dx, g.dw, g.db};
                     });

  T64 bx = randn({4, 3, 3, 3}, rng, 2.0), gamma = randn({3}, rng), beta = randn({3}, rng);
  const T64 br = randn(bx.shape(), rng);
  for (bool training : {true, false}) {
    const T64 m0 = randn({3}, rng), v0({3}, 1.7);
    err[training ? "batch norm (train)" : "batch norm (inference)"] = gc(
        {{"x", &bx}, {"gamma", &gamma}, {"beta", &beta}},
        [&] {
          T64 m = m0, v = v0;
          return probe(batch_norm_forward(bx, gamma, beta, m, v, training, static_cast<NormCache<double>*>(nullptr)),
                       br);
        },
        [&] {
          T64 m = m0, v = v0;
          NormCache<double> c;
          batch_norm_forward(bx, gamma, beta, m, v, training, &c);
          auto g = batch_norm_backward(c, gamma, br);
          return std::vector<T64>{g.dx, g.dgain, g.dbias};
        });
  }

  T64 nx = randn({3, 7}, rng, 3.0), gain = randn({7}, rng), bias = randn({7}, rng);
  const T64 nr = randn({3, 7}, rng);
  err["layer norm"] = gc(
      {{"x", &nx}, {"gain", &gain}, {"bias", &bias}},
      [&] { return probe(layernorm_forward(nx, gain, bias, static_cast<NormCache<double>*>(nullptr)), nr); },
      [&] {
        NormCache<double> c;
        layernorm_forward(nx, gain, bias, &c);
        auto g = layernorm_backward(c, gain, nr);
        return std::vector<T64>{g.dx, g.dgain, g.dbias};
      });

  T64 sx = randn({3, 6}, rng, 4.0);
  const T64 sr = randn({3, 6}, rng);
  err["softmax"] = gc({{"x", &sx}}, [&] { return probe(softmax_forward(sx), sr); },
                      [&] { return std::vector<T64>{softmax_backward(softmax_forward(sx), sr)}; });

  T64 logits = randn({6}, rng, 3.0);
  const std::vector<std::uint8_t> y{0, 1, 1, 0, 1, 0};
  err["binary cross-entropy"] = gc({{"logits", &logits}}, [&] { return bce_with_logits(logits, y).loss; },
                                   [&] { return std::vector<T64>{bce_with_logits(logits, y).grad}; });
  return err;
}

nn::AttentionConfig small_attention(nn::AttentionKind kind, int d, int heads) {
  nn::AttentionConfig c = nn::AttentionConfig::defaults(kind);
  c.d = d;
  c.n_heads = heads;
  return c;
}

nn::AttentionWeights<double> attention_weights(const nn::AttentionConfig& cfg, nn::TokenLayout l, Rng& rng) {
  auto w = nn::init_attention<double>(cfg, l, rng);
  for (Eigen::Index i = 0; i < w.gain.size(); ++i) {
    w.gain[i] = 1.0 + 0.3 * rng.normal();
    w.bias[i] = 0.3 * rng.normal();
  }
  return w;
}

double module_error(const nn::AttentionConfig& cfg, const nn::Shape& shape, std::uint64_t seed) {
  Rng rng(seed);
  T64 x = randn(shape, rng);
  auto w = attention_weights(cfg, nn::token_layout(cfg.kind, shape[1], shape[2], shape[3]), rng);
  const T64 r = randn(shape, rng);
  return gc({{"x", &x}, {"wq", &w.wq}, {"wk", &w.wk}, {"wv", &w.wv}, {"wo", &w.wo}, {"gain", &w.gain},
             {"bias", &w.bias}},
            [&] { return probe(nn::attention_forward<double>(cfg, x, w), r); },
            [&] {
              nn::AttentionCache<double> cache;
              nn::attention_forward<double>(cfg, x, w, &cache);
              auto g = nn::attention_backward<double>(cfg, cache, w, r);
              return std::vector<T64>{g.dx, g.dw.wq, g.dw.wk, g.dw.wv, g.dw.wo, g.dw.gain, g.dw.bias};
            });
}

double end_to_end_error(nn::AttentionKind kind, std::uint64_t seed) {
  nn::ModelConfig cfg;
  cfg.depth_tier = nn::DepthTier::Tiny;
  cfg.block_channels = {4, 4, 8, 8};
  cfg.input_size = 32;
  if (kind != nn::AttentionKind::None) cfg = nn::insert_attention(cfg, small_attention(kind, 6, 2));
  nn::Model<double> model(cfg, seed);
  Rng rng(seed + 100);
  const T64 x = randn({4, 1, 32, 32}, rng), r = randn({4}, rng);
  std::vector<nn::GradTarget> targets;
  for (const auto& p : model.params())
    if (!p.buffer) targets.push_back({p.name, p.tensor});
  return gc(
      targets, [&] { return probe(model.forward(x, true, false), r); },
      [&] {
        model.zero_grad();
        model.forward(x, true);
        model.backward(r);
        std::vector<T64> g;
        for (const auto& t : targets) g.emplace_back(t.tensor->shape(), t.tensor->grad());
        return g;
      },
      16, seed);
}

Outcome gradients(const Options&) {
  using nn::AttentionKind;
  bool pass = true;
  double worst_layer = 0.0;
  for (const auto& [name, e] : layer_errors()) {
    progress(fmt("%-24s %.2e", name.c_str(), e));
    worst_layer = std::max(worst_layer, e);
  }
  pass = pass && worst_layer < 1e-5;

  auto spatial = small_attention(AttentionKind::SAM, 4, 2);
  spatial.spatial_tokens = true;
  spatial.scale_by_tokens = true;
  const std::vector<std::pair<std::string, double>> modules{
      {"SAM", module_error(small_attention(AttentionKind::SAM, 8, 2), {2, 4, 5, 5}, 41)},
      {"FBAM", module_error(small_attention(AttentionKind::FBAM, 8, 2), {2, 4, 5, 5}, 42)},
      {"SAM spatial tokens", module_error(spatial, {1, 4, 3, 3}, 43)},
  };
  double worst_module = 0.0;
  for (const auto& [name, e] : modules) {
    progress(fmt("%-24s %.2e", name.c_str(), e));
    worst_module = std::max(worst_module, e);
  }
  pass = pass && worst_module < 1e-5;

  double worst_model = 0.0;
  for (auto kind : {AttentionKind::None, AttentionKind::SAM, AttentionKind::FBAM}) {
    const double e = end_to_end_error(kind, 50 + static_cast<int>(kind));
    progress(fmt("end-to-end %-13s %.2e", std::string(nn::attention_name(kind)).c_str(), e));
    worst_model = std::max(worst_model, e);
  }
  pass = pass && worst_model < 1e-4;

  // Row sums of every attention map.
  Rng rng(44);
  double worst_row = 0.0;
  for (auto kind : {AttentionKind::SAM, AttentionKind::FBAM}) {
    const auto cfg = small_attention(kind, 8, 2);
    const T64 x = randn({3, 4, 5, 5}, rng, 3.0);
    const auto w = attention_weights(cfg, nn::token_layout(kind, 4, 5, 5), rng);
    nn::AttentionCache<double> cache;
    nn::attention_forward<double>(cfg, x, w, &cache);
    for (const auto& sample : cache.samples)
      for (const auto& a : sample.attn) worst_row = std::max(worst_row, (a.rowwise().sum().array() - 1.0).abs().maxCoeff());
  }
  progress(fmt("attention row sums: worst |sum - 1| %.2e", worst_row));
  pass = pass && worst_row <= 1e-6;

  // FBAM on X equals SAM on the transposed map, bit for bit.
  const auto fcfg = small_attention(AttentionKind::FBAM, 6, 2);
  const T64 x = randn({2, 3, 2, 5}, rng);
  const auto w = attention_weights(fcfg, nn::token_layout(AttentionKind::FBAM, 3, 2, 5), rng);
  const T64 yf = nn::fbam_forward<double>(x, w, nullptr, fcfg);
  T64 xt({2, 10, 3, 1});
  for (int n = 0; n < 2; ++n)
    for (int c = 0; c < 3; ++c)
      for (int p = 0; p < 10; ++p) xt[(n * 10 + p) * 3 + c] = x[(n * 3 + c) * 10 + p];
  auto scfg = fcfg;
  scfg.kind = AttentionKind::SAM;
  const T64 ys = nn::sam_forward<double>(xt, w, nullptr, scfg);
  bool exact = true;
  for (int n = 0; n < 2; ++n)
    for (int c = 0; c < 3; ++c)
      for (int p = 0; p < 10; ++p) exact = exact && yf[(n * 3 + c) * 10 + p] == ys[(n * 10 + p) * 3 + c];
  progress(std::string("FBAM/SAM transpose duality: ") + (exact ? "exact" : "differs"));
  pass = pass && exact;

  return {pass, fmt("layers %.1e, attention modules %.1e, end-to-end %.1e, row sums %.1e, duality %s", worst_layer,
                    worst_module, worst_model, worst_row, exact ? "exact" : "inexact")};
}

// ---------------------------------------------------------------- 4, 5: desk training

train::RunResult run_and_record(const Options& opt, train::RunConfig cfg, const char* prefix) {
  const train::TaskData data = train::make_task_data(cfg.task_id, cfg.n_train, cfg.n_val, cfg.n_test,
                                                     cfg.model.input_size, cfg.seed, opt.threads);
  const train::RunResult r = train::train(cfg, data);
  const std::string stem = fmt("%s_task%02d_%s_n%d_%s_s%llu", prefix, cfg.task_id,
                               std::string(nn::tier_name(cfg.model.depth_tier)).c_str(), cfg.n_train,
                               std::string(nn::attention_name(cfg.model.attention.kind)).c_str(),
                               static_cast<unsigned long long>(cfg.seed));
  fs::create_directories(opt.runs);
  io::write_atomic(opt.runs / (stem + ".config.json"), records::config_json(r.config) + "\n");
  io::write_atomic(opt.runs / (stem + ".jsonl"), records::run_records(r));
  progress(fmt("%s: test %.4f, best val %.4f, %d epochs, %.0f s", stem.c_str(), r.test_acc, r.best_val_acc,
               r.epochs_ran, r.wall_time));
  return r;
}

train::RunConfig desk(int task, int seed) {
  train::RunConfig c = train::desk_config(task);
  c.n_val = kEvalCount;
  c.n_test = kEvalCount;
  c.seed = static_cast<std::uint64_t>(seed);
  return c;
}

double mean(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0) / v.size(); }

Outcome spatial_vs_same_different(const Options& opt) {
  std::vector<double> sr, sd;
  for (int seed = 0; seed < kSeeds; ++seed) {
    for (int task : kSpatialTasks) sr.push_back(run_and_record(opt, desk(task, seed), "desk").test_acc);
    sd.push_back(run_and_record(opt, desk(kSameDifferentTask, seed), "desk").test_acc);
  }
  for (std::size_t t = 0; t < kSpatialTasks.size(); ++t) {
    double s = 0.0;
    for (int seed = 0; seed < kSeeds; ++seed) s += sr[seed * kSpatialTasks.size() + t];
    progress(fmt("task %d mean test accuracy %.4f", kSpatialTasks[t], s / kSeeds));
  }
  const double a = mean(sr), b = mean(sd);
  return {a >= 0.90 && b <= 0.70 && a - b >= 0.15,
          fmt("spatial mean %.4f (>= 0.90), task %d mean %.4f (<= 0.70), gap %.4f (>= 0.15)", a, kSameDifferentTask, b,
              a - b)};
}

Outcome attention_gain(const Options& opt) {
  std::vector<double> vanilla, sam;
  for (int seed = 0; seed < kSeeds; ++seed) {
    train::RunConfig c = desk(kAttnTask, seed);
    c.n_train = kAttnTrain;
    vanilla.push_back(run_and_record(opt, c, "attn").test_acc);
    nn::AttentionConfig a = nn::AttentionConfig::defaults(nn::AttentionKind::SAM);
    a.d = kAttnD;
    c.model = nn::insert_attention(c.model, a);
    sam.push_back(run_and_record(opt, c, "attn").test_acc);
  }
  const double diff = mean(sam) - mean(vanilla);
  return {diff >= 0.02, fmt("task %d n=%d: SAM %.4f vs vanilla %.4f, difference %+.4f (>= +0.02)", kAttnTask, kAttnTrain,
                            mean(sam), mean(vanilla), diff)};
}

// ---------------------------------------------------------------- 6: shuffled pretraining

Outcome pretraining(const Options& opt) {
  train::PretrainConfig p;
  p.per_task = kPretrainPerTask;
  p.epochs = kPretrainEpochs;
  p.lr.switch_epoch = kPretrainSwitch;
  p.target_pool_acc = 0.95;
  p.threads = opt.threads;
  const auto t0 = std::chrono::steady_clock::now();
  const train::PretrainResult pre = train::pretrain_shuffled(p, [](int, const train::EpochRecord& e) {
    if (e.epoch % 5 == 4) progress(fmt("pretrain epoch %d: pool accuracy %.4f", e.epoch + 1, e.val_acc));
  });
  progress(fmt("pretrain: pool %.4f after %d epochs, fresh %.4f, %.0f s", pre.pool_acc, pre.epochs_ran, pre.fresh_acc,
               std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count()));

  train::RunConfig c = desk(2, 0);
  c.model = p.model;
  c.n_train = 200;
  c.n_val = 200;
  c.n_test = 200;
  c.epochs = 3;
  c.lr.switch_epoch = 2;
  const train::RunResult f = train::finetune_frozen(
      pre.backbone, c, train::make_task_data(c.task_id, c.n_train, c.n_val, c.n_test, c.model.input_size, 0, opt.threads));
  nn::Model<float> loaded(c.model, 0);
  nn::load_model_state(loaded, pre.backbone, true);
  const bool frozen = f.frozen_checksum_before == f.frozen_checksum_after &&
                      f.frozen_checksum_before == loaded.backbone_checksum();
  progress(fmt("finetune: backbone checksum %s before, %s after", hex(f.frozen_checksum_before).c_str(),
               hex(f.frozen_checksum_after).c_str()));
  const bool pass = pre.pool_acc >= 0.95 && pre.fresh_acc >= 0.45 && pre.fresh_acc <= 0.55 && frozen;
  return {pass, fmt("pool %.4f (>= 0.95), fresh %.4f (in [0.45, 0.55]), frozen backbone %s", pre.pool_acc,
                    pre.fresh_acc, frozen ? "unchanged" : "changed")};
}

// ---------------------------------------------------------------- 7: taxonomy statistics

struct Merge {
  std::set<int> members;
  double height;
};

std::vector<Merge> brute_ward(const Eigen::MatrixXd& x) {
  std::vector<std::set<int>> clusters;
  for (int i = 0; i < x.rows(); ++i) clusters.push_back({i});
  auto centroid = [&](const std::set<int>& s) {
    Eigen::RowVectorXd c = Eigen::RowVectorXd::Zero(x.cols());
    for (int i : s) c += x.row(i);
    return Eigen::RowVectorXd(c / static_cast<double>(s.size()));
  };
  std::vector<Merge> out;
  while (clusters.size() > 1) {
    double best = INFINITY;
    std::size_t bi = 0, bj = 0;
    for (std::size_t i = 0; i < clusters.size(); ++i)
      for (std::size_t j = i + 1; j < clusters.size(); ++j) {
        const double na = clusters[i].size(), nb = clusters[j].size();
        const double d = std::sqrt(2 * na * nb / (na + nb)) * (centroid(clusters[i]) - centroid(clusters[j])).norm();
        if (d < best) best = d, bi = i, bj = j;
      }
    std::set<int> merged = clusters[bi];
    merged.insert(clusters[bj].begin(), clusters[bj].end());
    out.push_back({merged, best});
    clusters.erase(clusters.begin() + static_cast<long>(bj));
    clusters[bi] = merged;
  }
  return out;
}

double sample_r(const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
  const Eigen::VectorXd a = x.array() - x.mean(), b = y.array() - y.mean();
  return a.dot(b) / std::sqrt(a.squaredNorm() * b.squaredNorm());
}

Outcome statistics(const Options&) {
  using namespace taxonomy;
  Rng rng(71);
  int ward_ok = 0;
  for (int trial = 0; trial < 100; ++trial) {
    Eigen::MatrixXd x(5, 1 + trial % 4);
    for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = rng.normal();
    const Dendrogram d = ward_cluster(x);
    const auto truth = brute_ward(x);
    std::vector<std::set<int>> sets;
    for (int i = 0; i < 5; ++i) sets.push_back({i});
    bool ok = d.merges.size() == 4;
    for (std::size_t k = 0; ok && k < 4; ++k) {
      std::set<int> s = sets[d.merges[k].a];
      s.insert(sets[d.merges[k].b].begin(), sets[d.merges[k].b].end());
      sets.push_back(s);
      ok = s == truth[k].members && std::abs(d.merges[k].distance - truth[k].height) <= 1e-10 * truth[k].height;
    }
    ward_ok += ok;
  }
  progress(fmt("ward: %d/100 match exhaustive agglomeration", ward_ok));

  double worst_pca = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    Eigen::MatrixXd x(23, 2 + trial % 6);
    for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = rng.normal();
    const PcaResult r = pca(x, static_cast<int>(x.cols()), trial % 2 == 1);
    worst_pca = std::max(worst_pca, std::abs(r.explained_ratio.sum() - 1.0));
  }
  progress(fmt("pca: worst |sum of explained ratios - 1| %.2e", worst_pca));

  Eigen::VectorXd x(23), e(23);
  for (int i = 0; i < 23; ++i) {
    x[i] = i - 11.0;
    e[i] = i % 2 ? 1.0 : -1.0;
  }
  e = e.array() - e.mean();
  e -= x * (x.dot(e) / x.squaredNorm());
  x.normalize();
  e.normalize();
  const std::vector<std::pair<double, double>> published{{0.649, 0.0008}, {-0.652, 0.0007}, {0.466, 0.0249},
                                                         {-0.491, 0.0174}};
  double worst_pair = 0.0;
  for (const auto& [r, p] : published) {
    const Eigen::VectorXd y = r * x + std::sqrt(1 - r * r) * e;
    const Correlation c = pearson(std::span(x.data(), 23), std::span(y.data(), 23));
    progress(fmt("r = %+.3f: p = %.6f (table %.4f)", c.r, c.p, p));
    worst_pair = std::max(worst_pair, std::abs(c.p - p));
  }

  constexpr int kDraws = 1000000;
  const std::vector<double> probes{0.2, 0.466, 0.491, 0.649, 0.652};
  std::vector<int> exceed(probes.size(), 0);
  Eigen::VectorXd a(23), b(23);
  for (int draw = 0; draw < kDraws; ++draw) {
    for (int i = 0; i < 23; ++i) a[i] = rng.normal(), b[i] = rng.normal();
    const double r = std::abs(sample_r(a, b));
    for (std::size_t k = 0; k < probes.size(); ++k) exceed[k] += r >= probes[k];
  }
  double worst_z = 0.0;
  for (std::size_t k = 0; k < probes.size(); ++k) {
    const double t = probes[k] * std::sqrt(21.0 / (1 - probes[k] * probes[k]));
    const double p = t_two_sided_p(t, 21);
    const double mc = static_cast<double>(exceed[k]) / kDraws;
    const double z = std::abs(mc - p) / std::sqrt(p * (1 - p) / kDraws);
    progress(fmt("|r| >= %.3f: t-test p %.6f, null frequency %.6f (%.2f sd)", probes[k], p, mc, z));
    worst_z = std::max(worst_z, z);
  }

  const bool pass = ward_ok == 100 && worst_pca <= 1e-10 && worst_pair <= 0.0002 && worst_z <= 4.0;
  return {pass, fmt("ward %d/100, pca ratio sum %.1e, published p worst %.5f, null oracle worst %.2f sd", ward_ok,
                    worst_pca, worst_pair, worst_z)};
}

// ---------------------------------------------------------------- 8: serialisation

Outcome serialisation(const Options& opt, Golden& golden) {
  int bad = 0;
  for (int task = 1; task <= tasks::kNumTasks; ++task) {
    const io::Dataset ds = io::generate(task, io::Split::Val, 10, task, opt.threads);
    const auto bytes = io::pack(ds);
    const io::Dataset back = io::unpack(bytes);
    bad += !(back == ds) || io::pack(back) != bytes;
  }
  progress(fmt("dataset pack round trips: %d/%d byte-identical", tasks::kNumTasks - bad, tasks::kNumTasks));

  const auto ckpt = reference_checkpoint();
  const auto decoded = nn::decode_checkpoint(ckpt);
  const fs::path file = fs::temp_directory_path() / "svrt_acceptance.svrtw";
  nn::save_checkpoint(file, decoded);
  const bool ckpt_ok = nn::encode_checkpoint(decoded) == ckpt && io::read_file(file) == ckpt &&
                       nn::encode_checkpoint(nn::load_checkpoint(file)) == ckpt;
  fs::remove(file);
  progress(std::string("checkpoint round trip: ") + (ckpt_ok ? "byte-identical" : "differs"));

  const std::string sum = hex(fnv1a64(ckpt));
  if (opt.write_golden) golden.set("checkpoint.small", sum);
  const std::string want = golden.get("checkpoint.small");
  int missing = want.empty(), mismatched = !want.empty() && want != sum;
  for (int task = 1; task <= tasks::kNumTasks; ++task) {
    const std::string key = fmt("dataset.task%02d", task);
    if (opt.write_golden) golden.set(key, hex(dataset_checksum(task, opt.threads)));
    const std::string g = golden.get(key);
    if (g.empty()) ++missing;
    else if (g != hex(dataset_checksum(task, opt.threads))) ++mismatched;
  }
  progress(fmt("golden checksums: %d mismatched, %d missing", mismatched, missing));
  const bool pass = bad == 0 && ckpt_ok && missing == 0 && mismatched == 0;
  return {pass, fmt("pack %d/%d, checkpoint %s, golden mismatches %d, missing %d", tasks::kNumTasks - bad,
                    tasks::kNumTasks, ckpt_ok ? "identical" : "differs", mismatched, missing)};
}

// ---------------------------------------------------------------- driver

int usage(const char* argv0) {
  std::fprintf(stderr, "usage: %s [criterion ...] [--write-golden] [--runs DIR] [--threads K] [--summary FILE]\n",
               argv0);
  return 2;
}

}  // namespace

int main(int argc, char** argv) {
  Options opt;
  opt.threads = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  if (const char* env = std::getenv("SVRT_THREADS")) opt.threads = std::max(1, std::atoi(env));
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--write-golden") opt.write_golden = true;
    else if (a == "--runs" && i + 1 < argc) opt.runs = argv[++i];
    else if (a == "--summary" && i + 1 < argc) opt.summary = argv[++i];
    else if (a == "--threads" && i + 1 < argc) opt.threads = std::max(1, std::atoi(argv[++i]));
    else if (!a.empty() && std::isdigit(static_cast<unsigned char>(a[0])) && std::atoi(a.c_str()) >= 1 &&
             std::atoi(a.c_str()) <= 8)
      opt.only.insert(std::atoi(a.c_str()));
    else return usage(argv[0]);
  }

  Golden golden(SVRT_GOLDEN);
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"generator soundness and determinism", [&] { return generator_soundness(opt, golden); }},
      {"geometry predicates against oracles", [&] { return geometry_oracles(opt); }},
      {"gradients and attention identities", [&] { return gradients(opt); }},
      {"spatial vs same-different at desk scale", [&] { return spatial_vs_same_different(opt); }},
      {"attention gain on task 1", [&] { return attention_gain(opt); }},
      {"shuffled-label pretraining and frozen fine-tuning", [&] { return pretraining(opt); }},
      {"taxonomy statistics", [&] { return statistics(opt); }},
      {"serialisation round trips and golden checksums", [&] { return serialisation(opt, golden); }},
  };

  int failed = 0;
  std::string lines;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!opt.only.empty() && !opt.only.contains(id)) continue;
    std::fprintf(stderr, "criterion %d: %s\n", id, criteria[i].first);
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const std::string line = fmt("criterion %d %s  %s: %s (%.0f s)\n", id, o.pass ? "PASS" : "FAIL",
                                 criteria[i].first, o.detail.c_str(), secs);
    std::fputs(line.c_str(), stdout);
    std::fflush(stdout);
    lines += line;
    if (!opt.summary.empty()) io::write_atomic(opt.summary, lines);
    failed += !o.pass;
  }
  if (opt.write_golden) golden.save();
  return failed == 0 ? 0 : 1;
}
