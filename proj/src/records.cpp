#include "svrt/records.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include <json.hpp>

#include "svrt/dataset.hpp"

namespace svrt::records {

using nlohmann::json;

namespace {

json config_to_json(const train::RunConfig& c) {
  const auto& a = c.model.attention;
  return json{
      {"task_id", c.task_id},
      {"model",
       {{"depth_tier", nn::tier_name(c.model.depth_tier)},
        {"block_channels", c.model.block_channels},
        {"input_size", c.model.input_size},
        {"first_stage_stride", c.model.first_stage_stride},
        {"attention",
         {{"kind", nn::attention_name(a.kind)},
          {"d", a.d},
          {"n_heads", a.n_heads},
          {"insert_after_block", a.insert_after_block},
          {"scale_by_tokens", a.scale_by_tokens},
          {"spatial_tokens", a.spatial_tokens}}}}},
      {"n_train", c.n_train},
      {"n_val", c.n_val},
      {"n_test", c.n_test},
      {"epochs", c.epochs},
      {"lr", {{"initial", c.lr.initial}, {"switch_epoch", c.lr.switch_epoch}, {"later", c.lr.later}}},
      {"lr_sweep", c.lr_sweep},
      {"n_restarts", c.n_restarts},
      {"batch_size", c.batch_size},
      {"seed", c.seed},
  };
}

}  // namespace

std::string config_json(const train::RunConfig& cfg) { return config_to_json(cfg).dump(); }

train::RunConfig parse_config_json(std::string_view text) {
  try {
    const json j = json::parse(text);
    train::RunConfig c;
    c.task_id = j.at("task_id");
    const json& m = j.at("model");
    c.model.depth_tier = nn::parse_tier(m.at("depth_tier").get<std::string>());
    c.model.block_channels = m.at("block_channels").get<std::vector<int>>();
    c.model.input_size = m.at("input_size");
    c.model.first_stage_stride = m.at("first_stage_stride");
    const json& a = m.at("attention");
    c.model.attention.kind = nn::parse_attention(a.at("kind").get<std::string>());
    c.model.attention.d = a.at("d");
    c.model.attention.n_heads = a.at("n_heads");
    c.model.attention.insert_after_block = a.at("insert_after_block");
    c.model.attention.scale_by_tokens = a.at("scale_by_tokens");
    c.model.attention.spatial_tokens = a.at("spatial_tokens");
    c.n_train = j.at("n_train");
    c.n_val = j.at("n_val");
    c.n_test = j.at("n_test");
    c.epochs = j.at("epochs");
    c.lr.initial = j.at("lr").at("initial");
    c.lr.switch_epoch = j.at("lr").at("switch_epoch");
    c.lr.later = j.at("lr").at("later");
    c.lr_sweep = j.at("lr_sweep").get<std::vector<double>>();
    c.n_restarts = j.at("n_restarts");
    c.batch_size = j.at("batch_size");
    c.seed = j.at("seed");
    return c;
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed run config: ") + e.what());
  }
}

std::string run_records(const train::RunResult& r) {
  std::string out = json{{"type", "config"}, {"config", config_to_json(r.config)}}.dump() + "\n";
  for (std::size_t i = 0; i < r.restarts.size(); ++i) {
    const auto& rr = r.restarts[i];
    for (const auto& e : rr.history)
      out += json{{"type", "epoch"},      {"restart", i},           {"lr", e.lr},
                  {"epoch", e.epoch},     {"train_loss", e.train_loss}, {"train_acc", e.train_acc},
                  {"val_acc", e.val_acc}}
                 .dump() +
             "\n";
  }
  json restarts = json::array();
  for (const auto& rr : r.restarts)
    restarts.push_back({{"seed", rr.seed},
                        {"lr", rr.lr},
                        {"best_val_acc", rr.best_val_acc},
                        {"best_epoch", rr.best_epoch},
                        {"test_acc", rr.test_acc},
                        {"epochs_ran", rr.epochs_ran},
                        {"stopped_early", rr.stopped_early}});
  json summary{{"type", "summary"},
               {"task_id", r.config.task_id},
               {"depth_tier", nn::tier_name(r.config.model.depth_tier)},
               {"n_train", r.config.n_train},
               {"attention", nn::attention_name(r.config.model.attention.kind)},
               {"seed", r.config.seed},
               {"best_val_acc", r.best_val_acc},
               {"test_acc", r.test_acc},
               {"epochs_ran", r.epochs_ran},
               {"stopped_early", r.stopped_early},
               {"selected_restart", r.selected},
               {"parameter_count", r.parameter_count},
               {"attention_parameter_count", r.attention_parameter_count},
               {"restarts", restarts}};
  if (r.frozen_checksum_before || r.frozen_checksum_after) {
    summary["frozen_checksum_before"] = hex64(r.frozen_checksum_before);
    summary["frozen_checksum_after"] = hex64(r.frozen_checksum_after);
  }
  return out + summary.dump() + "\n";
}

RunSummary parse_run_records(std::string_view text) {
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    const std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw DataError(std::string("malformed record line: ") + e.what());
    }
    if (j.value("type", "") != "summary") continue;
    try {
      return RunSummary{j.at("task_id"),        j.at("depth_tier"), j.at("n_train"), j.at("attention"),
                        j.at("test_acc"),       j.at("best_val_acc"), j.at("seed")};
    } catch (const json::exception& e) {
      throw DataError(std::string("malformed summary record: ") + e.what());
    }
  }
  throw DataError("records contain no summary line");
}

std::vector<RunSummary> scan_runs(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw DataError("runs directory not found: " + dir.string());
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::recursive_directory_iterator(dir))
    if (e.is_regular_file() && e.path().extension() == ".jsonl") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  std::vector<RunSummary> out;
  for (const auto& f : files) {
    const auto bytes = io::read_file(f);
    const std::string_view text(reinterpret_cast<const char*>(bytes.data()), bytes.size());
    try {
      out.push_back(parse_run_records(text));
    } catch (const DataError&) {
      // Incomplete runs have no summary yet.
    }
  }
  return out;
}

std::string condition_label(std::string_view tier, int n_train) {
  return std::string(tier) + "/n" + std::to_string(n_train);
}

taxonomy::AccuracyMatrix accuracy_grid(std::span<const RunSummary> runs, std::span<const std::string> tiers,
                                       std::span<const int> sizes, std::string_view attention,
                                       std::vector<Cell>& missing) {
  taxonomy::AccuracyMatrix m;
  for (int t = 1; t <= tasks::kNumTasks; ++t) m.tasks.push_back(t);
  for (const auto& tier : tiers)
    for (int s : sizes) m.columns.push_back(condition_label(tier, s));
  m.values = Eigen::MatrixXd::Constant(tasks::kNumTasks, static_cast<Eigen::Index>(m.columns.size()),
                                       std::numeric_limits<double>::quiet_NaN());
  missing.clear();
  for (int t = 1; t <= tasks::kNumTasks; ++t) {
    Eigen::Index col = 0;
    for (const auto& tier : tiers)
      for (int s : sizes) {
        double sum = 0.0;
        int count = 0;
        for (const auto& r : runs)
          if (r.task_id == t && r.tier == tier && r.n_train == s && r.attention == attention) {
            sum += r.test_acc;
            ++count;
          }
        if (count)
          m.values(t - 1, col) = sum / count;
        else
          missing.push_back({t, tier, s});
        ++col;
      }
  }
  return m;
}

}  // namespace svrt::records
