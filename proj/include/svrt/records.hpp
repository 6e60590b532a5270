#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "svrt/taxonomy.hpp"
#include "svrt/trainer.hpp"

namespace svrt::records {

/// Single-line JSON object with every RunConfig field.
std::string config_json(const train::RunConfig& cfg);
train::RunConfig parse_config_json(std::string_view text);

/// One "config" line, one "epoch" line per epoch of every restart, one "summary" line.
/// Wall time is left out so reruns are byte-identical.
std::string run_records(const train::RunResult& r);

struct RunSummary {
  int task_id = 0;
  std::string tier;
  int n_train = 0;
  std::string attention;
  double test_acc = 0.0;
  double best_val_acc = 0.0;
  std::uint64_t seed = 0;
};

/// Reads the summary line of a records file. Throws DataError when there is none.
RunSummary parse_run_records(std::string_view text);
/// Every *.jsonl file under `dir` holding a summary.
std::vector<RunSummary> scan_runs(const std::filesystem::path& dir);

struct Cell {
  int task_id;
  std::string tier;
  int n_train;
};

/// Column label of a (tier, size) condition, e.g. "small/n2000".
std::string condition_label(std::string_view tier, int n_train);

/// Tasks 1..23 x (tier, size) conditions of runs with the given attention kind; cells with
/// several runs hold their mean. Missing cells are listed in `missing` and left NaN.
taxonomy::AccuracyMatrix accuracy_grid(std::span<const RunSummary> runs, std::span<const std::string> tiers,
                                       std::span<const int> sizes, std::string_view attention,
                                       std::vector<Cell>& missing);

}  // namespace svrt::records
