// svrt: dataset generation, training and taxonomy analysis.
//
// Exit codes: 0 success, 2 usage, 3 missing data, 4 runtime failure.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "svrt/checkpoint.hpp"
#include "svrt/dataset.hpp"
#include "svrt/plots.hpp"
#include "svrt/records.hpp"
#include "svrt/taxonomy.hpp"
#include "svrt/trainer.hpp"

namespace fs = std::filesystem;
using namespace svrt;
using train::LrSchedule;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitMissing = 3;
constexpr int kExitRuntime = 4;

class UsageError : public Error {
 public:
  using Error::Error;
};

class MissingData : public Error {
 public:
  using Error::Error;
};

struct Global {
  std::uint64_t seed = 0;
  int threads = 1;
  std::string out = "out";
};

int effective_threads(int flag) {
  if (const char* env = std::getenv("SVRT_THREADS")) {
    try {
      const int v = std::stoi(env);
      if (v >= 1) return v;
    } catch (const std::exception&) {
    }
    throw UsageError(std::string("SVRT_THREADS must be a positive integer, got '") + env + "'");
  }
  return std::max(1, flag);
}

std::string dataset_stem(int task, io::Split split) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "task%02d_%s", task, std::string(io::split_name(split)).c_str());
  return buf;
}

// ---------------------------------------------------------------- gen

struct GenArgs {
  int task = 1;
  std::uint32_t n = 100;
  std::string split = "train";
  int png_sample = 0;
};

int cmd_gen(const GenArgs& a, const Global& g) {
  if (a.n % 2) throw UsageError("--n must be even (datasets are class-balanced)");
  const io::Split split = io::parse_split(a.split);
  const fs::path out(g.out);
  fs::create_directories(out);
  const io::Dataset ds = io::generate(a.task, split, a.n, g.seed, effective_threads(g.threads));
  const auto packed = io::pack(ds);
  const io::DatasetManifest manifest = io::manifest_for(ds, split, g.seed, packed);
  const std::string stem = dataset_stem(a.task, split);
  io::write_atomic(out / (stem + ".svrt"), packed);
  io::write_atomic(out / (stem + ".manifest"), manifest.to_text());
  if (a.png_sample > 0) {
    const fs::path dir = out / (stem + "_png");
    fs::create_directories(dir);
    int written[2] = {0, 0};
    const int per_class = (a.png_sample + 1) / 2;
    for (const auto& s : ds.samples) {
      if (written[s.label] >= per_class || written[0] + written[1] >= a.png_sample) continue;
      char name[64];
      std::snprintf(name, sizeof name, "label%d_%02d.png", s.label, written[s.label]++);
      io::write_png(dir / name, s.image);
    }
  }
  std::printf("task=%d split=%s n=%u seed=%llu checksum=%s\n", a.task, a.split.c_str(), a.n,
              static_cast<unsigned long long>(g.seed), hex64(manifest.checksum).c_str());
  return 0;
}

// ---------------------------------------------------------------- run configuration flags

struct RunArgs {
  train::RunConfig cfg;
  std::string tier = "small";
  std::string attn = "none";
  int attn_block = 0;
  int attn_d = 0;
  int attn_heads = 0;
  bool attn_scale_tokens = false;
  bool attn_spatial_tokens = false;
  std::string data_dir;
  std::uint64_t data_seed = 0;
  bool data_seed_set = false;
  CLI::Option* switch_opt = nullptr;
};

// Without an explicit switch epoch, shortened runs switch at 70% of their length.
void default_switch(LrSchedule& lr, int epochs, const CLI::Option* opt) {
  if (opt && opt->count() == 0 && lr.switch_epoch >= epochs) lr.switch_epoch = epochs * 7 / 10;
}

void add_run_flags(CLI::App* c, RunArgs& r) {
  auto& cfg = r.cfg;
  c->add_option("--task", cfg.task_id, "Task id (1-23)")->check(CLI::Range(1, 23))->required();
  c->add_option("--tier", r.tier, "Depth tier: tiny, small, medium")->check(CLI::IsMember({"tiny", "small", "medium"}));
  c->add_option("--channels", cfg.model.block_channels, "Channels per residual stage")->expected(1, 8);
  c->add_option("--input-size", cfg.model.input_size, "Network input side length");
  c->add_option("--first-stride", cfg.model.first_stage_stride, "Stride of the first residual stage")
      ->check(CLI::Range(1, 2));
  c->add_option("--attn", r.attn, "Attention module: none, sam, fbam")->check(CLI::IsMember({"none", "sam", "fbam"}));
  c->add_option("--attn-block", r.attn_block, "Residual stage followed by attention (0 = default)")
      ->check(CLI::Range(0, 8));
  c->add_option("--attn-d", r.attn_d, "Attention head dimension (0 = default)");
  c->add_option("--attn-heads", r.attn_heads, "Attention head count (0 = default)");
  c->add_flag("--attn-scale-tokens", r.attn_scale_tokens, "Scale logits by sqrt(token length)");
  c->add_flag("--attn-spatial-tokens", r.attn_spatial_tokens, "Attend over the token axis");
  c->add_option("--n-train", cfg.n_train, "Training samples");
  c->add_option("--n-val", cfg.n_val, "Validation samples");
  c->add_option("--n-test", cfg.n_test, "Test samples");
  c->add_option("--epochs", cfg.epochs, "Epochs");
  c->add_option("--lr", cfg.lr.initial, "Initial learning rate");
  r.switch_opt = c->add_option("--switch-epoch", cfg.lr.switch_epoch, "Epoch at which the later rate applies");
  c->add_option("--lr-later", cfg.lr.later, "Learning rate after the switch");
  c->add_option("--lr-sweep", cfg.lr_sweep, "Initial learning rates to sweep")->expected(1, 16);
  c->add_option("--restarts", cfg.n_restarts, "Independent initialisations per rate");
  c->add_option("--batch", cfg.batch_size, "Mini-batch size");
  c->add_option("--data", r.data_dir, "Directory with packed datasets from `gen` (otherwise generated in memory)");
  c->add_option("--data-seed", r.data_seed, "Dataset seed when generating in memory (default: --seed)")
      ->each([&r](const std::string&) { r.data_seed_set = true; });
}

train::RunConfig finish_config(RunArgs& r, const Global& g) {
  train::RunConfig cfg = r.cfg;
  cfg.seed = g.seed;
  cfg.model.depth_tier = nn::parse_tier(r.tier);
  default_switch(cfg.lr, cfg.epochs, r.switch_opt);
  const nn::AttentionKind kind = nn::parse_attention(r.attn);
  if (kind != nn::AttentionKind::None) {
    nn::AttentionConfig a = nn::AttentionConfig::defaults(kind);
    if (r.attn_block) a.insert_after_block = r.attn_block;
    if (r.attn_d) a.d = r.attn_d;
    if (r.attn_heads) a.n_heads = r.attn_heads;
    a.scale_by_tokens = r.attn_scale_tokens;
    a.spatial_tokens = r.attn_spatial_tokens;
    cfg.model = nn::insert_attention(cfg.model, a);
  }
  try {
    cfg.validate();
  } catch (const ConfigError& e) {
    throw UsageError(e.what());
  }
  return cfg;
}

train::Batch load_split(const fs::path& dir, int task, io::Split split, int n, int size) {
  const fs::path p = dir / (dataset_stem(task, split) + ".svrt");
  if (!fs::exists(p)) throw MissingData("missing dataset " + p.string() + " (run `svrt gen` first)");
  io::Dataset ds = io::unpack(io::read_file(p));
  if (static_cast<int>(ds.samples.size()) < n)
    throw MissingData(p.string() + " holds " + std::to_string(ds.samples.size()) + " samples, " + std::to_string(n) +
                      " requested");
  // Keep class balance: labels alternate, so a prefix of even length is balanced.
  ds.samples.resize(n);
  return train::to_batch(ds, size);
}

train::TaskData task_data(const RunArgs& r, const train::RunConfig& cfg, const Global& g) {
  const int size = cfg.model.input_size;
  if (!r.data_dir.empty()) {
    const fs::path dir(r.data_dir);
    return {load_split(dir, cfg.task_id, io::Split::Train, cfg.n_train, size),
            load_split(dir, cfg.task_id, io::Split::Val, cfg.n_val, size),
            load_split(dir, cfg.task_id, io::Split::Test, cfg.n_test, size)};
  }
  return train::make_task_data(cfg.task_id, cfg.n_train, cfg.n_val, cfg.n_test, size,
                               r.data_seed_set ? r.data_seed : g.seed, effective_threads(g.threads));
}

std::string run_stem(const train::RunConfig& cfg, const char* prefix) {
  char buf[128];
  std::snprintf(buf, sizeof buf, "%s_task%02d_%s_n%d_%s_s%llu", prefix, cfg.task_id,
                std::string(nn::tier_name(cfg.model.depth_tier)).c_str(), cfg.n_train,
                std::string(nn::attention_name(cfg.model.attention.kind)).c_str(),
                static_cast<unsigned long long>(cfg.seed));
  return buf;
}

void print_parameters(const train::RunResult& r) {
  std::printf("parameters=%lld attention_parameters=%lld\n", static_cast<long long>(r.parameter_count),
              static_cast<long long>(r.attention_parameter_count));
}

void print_summary(const train::RunResult& r) {
  std::printf("summary task=%d test_acc=%.4f best_val_acc=%.4f epochs_ran=%d stopped_early=%s\n",
              r.config.task_id, r.test_acc, r.best_val_acc, r.epochs_ran, r.stopped_early ? "true" : "false");
}

void write_run(const fs::path& out, const std::string& stem, const train::RunResult& r) {
  fs::create_directories(out);
  io::write_atomic(out / (stem + ".config.json"), records::config_json(r.config) + "\n");
  io::write_atomic(out / (stem + ".jsonl"), records::run_records(r));
  char buf[64];
  std::snprintf(buf, sizeof buf, "{\"wall_time\":%.3f}\n", r.wall_time);
  io::write_atomic(out / (stem + ".time.json"), std::string(buf));
}

train::Progress verbose_progress(bool verbose) {
  if (!verbose) return {};
  return [](int restart, const train::EpochRecord& e) {
    std::fprintf(stderr, "restart %d epoch %d lr %.1e loss %.4f train_acc %.4f val_acc %.4f\n", restart, e.epoch, e.lr,
                 e.train_loss, e.train_acc, e.val_acc);
  };
}

int cmd_train(RunArgs& r, const Global& g, bool verbose) {
  const train::RunConfig cfg = finish_config(r, g);
  const train::TaskData data = task_data(r, cfg, g);
  const train::RunResult res = train::train(cfg, data, verbose_progress(verbose));
  print_parameters(res);
  write_run(g.out, run_stem(cfg, "run"), res);
  print_summary(res);
  return 0;
}

// ---------------------------------------------------------------- pretrain / finetune

struct PretrainArgs {
  train::PretrainConfig cfg;
  std::string tier = "medium";
  CLI::Option* switch_opt = nullptr;
};

int cmd_pretrain(PretrainArgs& a, const Global& g, bool verbose) {
  a.cfg.model.depth_tier = nn::parse_tier(a.tier);
  default_switch(a.cfg.lr, a.cfg.epochs, a.switch_opt);
  a.cfg.seed = g.seed;
  a.cfg.threads = effective_threads(g.threads);
  if (a.cfg.per_task < 2 || a.cfg.per_task % 2) throw UsageError("--per-task must be even and >= 2");
  const train::PretrainResult res = train::pretrain_shuffled(a.cfg, verbose_progress(verbose));
  const fs::path out(g.out);
  fs::create_directories(out);
  nn::save_checkpoint(out / "backbone.svrtw", res.backbone);
  std::ostringstream echo;
  echo << "{\"per_task\":" << a.cfg.per_task << ",\"tier\":\"" << a.tier << "\",\"epochs\":" << a.cfg.epochs
       << ",\"lr\":" << a.cfg.lr.initial << ",\"switch_epoch\":" << a.cfg.lr.switch_epoch
       << ",\"lr_later\":" << a.cfg.lr.later << ",\"batch_size\":" << a.cfg.batch_size
       << ",\"target_pool_acc\":" << a.cfg.target_pool_acc << ",\"n_fresh\":" << a.cfg.n_fresh
       << ",\"seed\":" << a.cfg.seed << "}\n";
  io::write_atomic(out / "pretrain.config.json", echo.str());
  std::string lines;
  for (const auto& e : res.history) {
    char buf[192];
    std::snprintf(buf, sizeof buf,
                  "{\"type\":\"epoch\",\"epoch\":%d,\"lr\":%.9g,\"train_loss\":%.9g,\"train_acc\":%.9g,"
                  "\"pool_acc\":%.9g}\n",
                  e.epoch, e.lr, e.train_loss, e.train_acc, e.val_acc);
    lines += buf;
  }
  char buf[192];
  std::snprintf(buf, sizeof buf,
                "{\"type\":\"summary\",\"pool_size\":%d,\"epochs_ran\":%d,\"pool_acc\":%.9g,\"fresh_acc\":%.9g}\n",
                res.pool_size, res.epochs_ran, res.pool_acc, res.fresh_acc);
  io::write_atomic(out / "pretrain.jsonl", lines + buf);
  std::printf("summary pool_size=%d epochs_ran=%d pool_acc=%.4f fresh_acc=%.4f\n", res.pool_size, res.epochs_ran,
              res.pool_acc, res.fresh_acc);
  return 0;
}

int cmd_finetune(RunArgs& r, const std::string& backbone, const Global& g, bool verbose) {
  const train::RunConfig cfg = finish_config(r, g);
  std::vector<nn::NamedTensor> state;
  if (!backbone.empty()) {
    if (!fs::exists(backbone)) throw MissingData("missing backbone checkpoint " + backbone);
    state = nn::load_checkpoint(backbone);
  }
  const train::TaskData data = task_data(r, cfg, g);
  const train::RunResult res = train::finetune_frozen(state, cfg, data, verbose_progress(verbose));
  print_parameters(res);
  write_run(g.out, run_stem(cfg, backbone.empty() ? "finetune_random" : "finetune"), res);
  std::printf("frozen_checksum_before=%s frozen_checksum_after=%s\n", hex64(res.frozen_checksum_before).c_str(),
              hex64(res.frozen_checksum_after).c_str());
  print_summary(res);
  return 0;
}

// ---------------------------------------------------------------- analyze

struct AnalyzeArgs {
  std::string runs = "runs";
  std::vector<std::string> tiers{"tiny", "small", "medium"};
  std::vector<int> sizes{500, 1000, 5000, 10000, 15000};
  int k = 2;
  bool standardize = false;
  std::string attention = "sam";
  std::string tier = "small";
  std::string axis = "log10";
  std::string slopes_csv;
  std::string pca_csv;
};

taxonomy::AccuracyMatrix load_grid(const AnalyzeArgs& a, std::span<const std::string> tiers,
                                   std::string_view attention) {
  const auto runs = records::scan_runs(a.runs);
  std::vector<records::Cell> missing;
  taxonomy::AccuracyMatrix m = records::accuracy_grid(runs, tiers, a.sizes, attention, missing);
  if (!missing.empty()) {
    std::string msg = std::to_string(missing.size()) + " missing accuracy cells (attention=" +
                      std::string(attention) + "):";
    for (const auto& c : missing)
      msg += "\n  task=" + std::to_string(c.task_id) + " depth=" + c.tier + " size=" + std::to_string(c.n_train);
    throw MissingData(msg);
  }
  return m;
}

std::vector<std::string> read_lines(const fs::path& p) {
  if (!fs::exists(p)) throw MissingData("missing input " + p.string());
  std::ifstream in(p);
  std::vector<std::string> out;
  for (std::string line; std::getline(in, line);)
    if (!line.empty() && line[0] != '#') out.push_back(line);
  return out;
}

std::vector<double> csv_numbers(const std::string& line) {
  std::vector<double> v;
  std::stringstream ss(line);
  for (std::string cell; std::getline(ss, cell, ',');) v.push_back(std::stod(cell));
  return v;
}

int cmd_analyze(const std::string& sub, const AnalyzeArgs& a, const Global& g) {
  const fs::path out(g.out);
  fs::create_directories(out);
  char buf[256];
  if (sub == "cluster") {
    const taxonomy::AccuracyMatrix m = load_grid(a, a.tiers, "none");
    const taxonomy::Dendrogram d = taxonomy::ward_cluster(m);
    std::string csv = "step,cluster_a,cluster_b,distance,size\n";
    for (std::size_t i = 0; i < d.merges.size(); ++i) {
      const auto& mg = d.merges[i];
      std::snprintf(buf, sizeof buf, "%zu,%d,%d,%.12g,%d\n", i, mg.a, mg.b, mg.distance, mg.size);
      csv += buf;
    }
    std::string order = "leaf_order";
    for (int l : d.leaf_order) order += "," + std::to_string(m.tasks[l]);
    csv += "# " + order + "\n";
    std::vector<std::string> labels;
    for (int t : m.tasks) labels.push_back(std::to_string(t));
    io::write_atomic(out / "cluster.csv", csv);
    io::write_atomic(out / "dendrogram.svg", plots::dendrogram_svg(d, labels));
    std::printf("merges=%zu %s\n", d.merges.size(), order.c_str());
    return 0;
  }
  if (sub == "pca") {
    const taxonomy::AccuracyMatrix m = load_grid(a, a.tiers, "none");
    const taxonomy::PcaResult p = taxonomy::pca(m.values, a.k, a.standardize);
    std::string csv = "# explained_variance_ratio";
    for (Eigen::Index j = 0; j < p.explained_ratio.size(); ++j) {
      std::snprintf(buf, sizeof buf, ",%.12g", p.explained_ratio[j]);
      csv += buf;
    }
    csv += "\ntask";
    for (int j = 0; j < a.k; ++j) csv += ",pc" + std::to_string(j + 1);
    csv += "\n";
    for (Eigen::Index i = 0; i < p.projections.rows(); ++i) {
      csv += std::to_string(m.tasks[i]);
      for (Eigen::Index j = 0; j < p.projections.cols(); ++j) {
        std::snprintf(buf, sizeof buf, ",%.12g", p.projections(i, j));
        csv += buf;
      }
      csv += "\n";
    }
    io::write_atomic(out / "pca.csv", csv);
    if (a.k >= 2) io::write_atomic(out / "pca.svg", plots::pca_scatter_svg(p.projections, m.tasks, p.explained_ratio));
    for (Eigen::Index j = 0; j < p.explained_ratio.size(); ++j)
      std::printf("pc%lld explained_ratio=%.6f\n", static_cast<long long>(j + 1), p.explained_ratio[j]);
    return 0;
  }
  if (sub == "slopes") {
    const std::vector<std::string> tier{a.tier};
    const taxonomy::AccuracyMatrix attn = load_grid(a, tier, a.attention);
    const taxonomy::AccuracyMatrix van = load_grid(a, tier, "none");
    std::vector<double> sizes(a.sizes.begin(), a.sizes.end());
    const taxonomy::SlopeVector s = taxonomy::slope_vector(attn.values, van.values, sizes, attn.tasks, a.attention,
                                                           taxonomy::parse_slope_axis(a.axis));
    std::string csv = "task,slope\n";
    for (Eigen::Index i = 0; i < s.slopes.size(); ++i) {
      std::snprintf(buf, sizeof buf, "%d,%.12g\n", s.tasks[i], s.slopes[i]);
      csv += buf;
    }
    io::write_atomic(out / ("slopes_" + a.attention + ".csv"), csv);
    io::write_atomic(out / ("slopes_" + a.attention + ".svg"), plots::slope_bars_svg(s));
    std::printf("slopes=%lld tag=%s\n", static_cast<long long>(s.slopes.size()), a.attention.c_str());
    return 0;
  }
  if (sub == "correlate") {
    if (a.slopes_csv.empty() || a.pca_csv.empty()) throw UsageError("correlate needs --slopes and --pca");
    taxonomy::SlopeVector s;
    s.tag = fs::path(a.slopes_csv).stem().string();
    std::vector<double> sv;
    for (const auto& line : read_lines(a.slopes_csv)) {
      if (line.rfind("task", 0) == 0) continue;
      const auto v = csv_numbers(line);
      if (v.size() != 2) throw DataError("slopes rows need task,slope: " + line);
      s.tasks.push_back(static_cast<int>(v[0]));
      sv.push_back(v[1]);
    }
    s.slopes = Eigen::Map<Eigen::VectorXd>(sv.data(), static_cast<Eigen::Index>(sv.size()));
    std::vector<std::vector<double>> rows;
    for (const auto& line : read_lines(a.pca_csv)) {
      if (line.rfind("task", 0) == 0) continue;
      rows.push_back(csv_numbers(line));
    }
    if (rows.empty() || rows.size() != sv.size()) throw DataError("pca and slope tables differ in task count");
    Eigen::MatrixXd proj(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows[0].size() - 1));
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (static_cast<int>(rows[i][0]) != s.tasks[i]) throw DataError("pca and slope tables list tasks in different order");
      for (std::size_t j = 1; j < rows[i].size(); ++j) proj(i, j - 1) = rows[i][j];
    }
    const auto corr = taxonomy::correlate_slopes(s, proj);
    std::string csv = "component,r,p,n\n";
    for (std::size_t j = 0; j < corr.size(); ++j) {
      std::snprintf(buf, sizeof buf, "pc%zu,%.6f,%.6g,%d\n", j + 1, corr[j].r, corr[j].p, corr[j].n);
      csv += buf;
      std::printf("%s", buf);
    }
    io::write_atomic(out / ("correlate_" + s.tag + ".csv"), csv);
    return 0;
  }
  throw UsageError("unknown analyze subcommand " + sub);
}

// ---------------------------------------------------------------- repro

int cmd_repro(const std::string& profile, const Global& g, bool verbose) {
  struct Profile {
    std::vector<std::string> tiers;
    std::vector<int> sizes;
    int epochs;
    int n_eval;
  };
  Profile p;
  if (profile == "smoke")
    p = {{"tiny"}, {20, 40}, 1, 20};
  else if (profile == "desk")
    p = {{"tiny", "small"}, {500, 1000, 2000}, 15, 1000};
  else
    throw UsageError("unknown profile '" + profile + "' (expected smoke or desk)");
  const fs::path out(g.out);
  const fs::path runs = out / "runs";
  const int threads = effective_threads(g.threads);
  const int max_n = *std::max_element(p.sizes.begin(), p.sizes.end());
  std::size_t done = 0;
  for (int t = 1; t <= tasks::kNumTasks; ++t) {
    const train::TaskData full = train::make_task_data(t, max_n, p.n_eval, p.n_eval, 64, g.seed, threads);
    for (const auto& tier : p.tiers)
      for (int n : p.sizes) {
        train::RunConfig cfg = train::desk_config(t);
        cfg.model.depth_tier = nn::parse_tier(tier);
        cfg.n_train = n;
        cfg.n_val = cfg.n_test = p.n_eval;
        cfg.epochs = p.epochs;
        cfg.lr.switch_epoch = p.epochs * 7 / 10;
        cfg.seed = g.seed;
        train::TaskData d = full;
        d.train.x = d.train.x.reshaped({max_n, 1, 64, 64});
        if (n < max_n) {
          train::Batch b{nn::Tensor<float>({n, 1, 64, 64}), {d.train.y.begin(), d.train.y.begin() + n}};
          b.x.data() = d.train.x.data().head(b.x.size());
          d.train = std::move(b);
        }
        const train::RunResult r = train::train(cfg, d, verbose_progress(verbose));
        write_run(runs, run_stem(cfg, "run"), r);
        std::printf("[%zu/%zu] task=%d tier=%s n=%d test_acc=%.4f\n", ++done,
                    static_cast<std::size_t>(tasks::kNumTasks) * p.tiers.size() * p.sizes.size(), t, tier.c_str(), n,
                    r.test_acc);
      }
  }
  AnalyzeArgs a;
  a.runs = runs.string();
  a.tiers = p.tiers;
  a.sizes = p.sizes;
  Global ga = g;
  ga.out = (out / "analysis").string();
  cmd_analyze("cluster", a, ga);
  cmd_analyze("pca", a, ga);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"SVRT scene generation, training and taxonomy analysis"};
  app.require_subcommand(1);
  Global g;
  bool verbose = false;
  auto add_globals = [&](CLI::App* c) {
    c->add_option("--seed", g.seed, "Base seed");
    c->add_option("--threads", g.threads, "Worker threads (SVRT_THREADS overrides)");
    c->add_option("--out", g.out, "Output directory");
    c->add_flag("-v,--verbose", verbose, "Per-epoch progress on stderr");
  };

  GenArgs gen;
  auto* c_gen = app.add_subcommand("gen", "Generate a packed, class-balanced dataset");
  c_gen->add_option("--task", gen.task, "Task id (1-23)")->check(CLI::Range(1, 23))->required();
  c_gen->add_option("--n", gen.n, "Number of samples (even)");
  c_gen->add_option("--split", gen.split, "train, val or test")->check(CLI::IsMember({"train", "val", "test"}));
  c_gen->add_option("--png-sample", gen.png_sample, "Write this many inspection PNGs, half per class");
  add_globals(c_gen);

  RunArgs tr;
  auto* c_train = app.add_subcommand("train", "Train a network on one task");
  add_run_flags(c_train, tr);
  add_globals(c_train);

  PretrainArgs pre;
  pre.cfg.model.depth_tier = nn::DepthTier::Medium;
  auto* c_pre = app.add_subcommand("pretrain", "Shuffled-label pretraining on all tasks");
  c_pre->add_option("--per-task", pre.cfg.per_task, "Images per task (even)");
  c_pre->add_option("--tier", pre.tier, "Depth tier")->check(CLI::IsMember({"tiny", "small", "medium"}));
  c_pre->add_option("--epochs", pre.cfg.epochs, "Maximum epochs");
  c_pre->add_option("--lr", pre.cfg.lr.initial, "Initial learning rate");
  pre.switch_opt = c_pre->add_option("--switch-epoch", pre.cfg.lr.switch_epoch, "Epoch at which the later rate applies");
  c_pre->add_option("--lr-later", pre.cfg.lr.later, "Learning rate after the switch");
  c_pre->add_option("--batch", pre.cfg.batch_size, "Mini-batch size");
  c_pre->add_option("--target", pre.cfg.target_pool_acc, "Stop once pool accuracy reaches this");
  c_pre->add_option("--n-fresh", pre.cfg.n_fresh, "Fresh held-out images for the generalisation check");
  c_pre->add_option("--input-size", pre.cfg.model.input_size, "Network input side length");
  add_globals(c_pre);

  RunArgs ft;
  ft.cfg.lr_sweep = {1e-4, 1e-5, 1e-6};
  ft.cfg.lr.initial = 1e-4;
  ft.cfg.lr.later = 1e-5;
  std::string backbone;
  auto* c_ft = app.add_subcommand("finetune", "Train only the classifier on a frozen backbone");
  add_run_flags(c_ft, ft);
  c_ft->add_option("--backbone", backbone, "Checkpoint from `pretrain` (omit for a random frozen backbone)");
  add_globals(c_ft);

  AnalyzeArgs an;
  std::string analyze_sub;
  auto* c_an = app.add_subcommand("analyze", "Taxonomy analysis over a directory of run records");
  c_an->add_option("sub", analyze_sub, "cluster, pca, slopes or correlate")
      ->required()
      ->check(CLI::IsMember({"cluster", "pca", "slopes", "correlate"}));
  c_an->add_option("--runs", an.runs, "Directory of run records");
  c_an->add_option("--tiers", an.tiers, "Depth tiers forming the condition columns");
  c_an->add_option("--sizes", an.sizes, "Training-set sizes forming the condition columns");
  c_an->add_option("-k,--components", an.k, "Principal components");
  c_an->add_flag("--standardize", an.standardize, "Scale columns to unit variance before PCA");
  c_an->add_option("--attention", an.attention, "Attention kind compared with vanilla (slopes)")
      ->check(CLI::IsMember({"sam", "fbam"}));
  c_an->add_option("--tier", an.tier, "Depth tier used for slopes");
  c_an->add_option("--axis", an.axis, "Slope abscissa: log10, raw, index")->check(CLI::IsMember({"log10", "raw", "index"}));
  c_an->add_option("--slopes", an.slopes_csv, "Slope table (correlate)");
  c_an->add_option("--pca", an.pca_csv, "PCA projection table (correlate)");
  add_globals(c_an);

  std::string profile = "smoke";
  auto* c_repro = app.add_subcommand("repro", "Generate, train and analyse a named desk-scale profile");
  c_repro->add_option("--profile", profile, "smoke or desk")->check(CLI::IsMember({"smoke", "desk"}));
  add_globals(c_repro);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (*c_gen) return cmd_gen(gen, g);
    if (*c_train) return cmd_train(tr, g, verbose);
    if (*c_pre) return cmd_pretrain(pre, g, verbose);
    if (*c_ft) return cmd_finetune(ft, backbone, g, verbose);
    if (*c_an) return cmd_analyze(analyze_sub, an, g);
    if (*c_repro) return cmd_repro(profile, g, verbose);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ConfigError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const MissingData& e) {
    std::cerr << "missing data: " << e.what() << "\n";
    return kExitMissing;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitUsage;
}
