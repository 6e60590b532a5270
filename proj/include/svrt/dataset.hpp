#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "svrt/raster.hpp"

namespace svrt::io {

inline constexpr char kPackMagic[5] = {'S', 'V', 'R', 'T', '1'};
inline constexpr std::uint8_t kPackVersion = 1;
/// magic(5) + version(1) + task(2) + count(4) + height(2) + width(2)
inline constexpr std::size_t kPackHeaderBytes = 16;
inline constexpr std::string_view kGeneratorVersion = "svrt-gen/1";

enum class Split { Train, Val, Test };

std::string_view split_name(Split s);
/// Throws std::invalid_argument for anything but "train", "val", "test".
Split parse_split(std::string_view s);

struct Sample {
  std::uint8_t label = 0;
  Image image;

  friend bool operator==(const Sample&, const Sample&) = default;
};

struct Dataset {
  int task_id = 0;
  int height = tasks::kFrame;
  int width = tasks::kFrame;
  std::vector<Sample> samples;

  friend bool operator==(const Dataset&, const Dataset&) = default;
};

std::vector<std::uint8_t> pack(const Dataset& ds);
/// Throws FormatError on bad magic, version or truncation; the offset names the first bad byte.
Dataset unpack(std::span<const std::uint8_t> bytes);

struct DatasetManifest {
  int task_id = 0;
  Split split = Split::Train;
  std::uint32_t count = 0;
  std::uint64_t seed = 0;
  std::string generator_version{kGeneratorVersion};
  std::uint64_t checksum = 0;

  std::string to_text() const;
  static DatasetManifest parse(std::string_view text);

  friend bool operator==(const DatasetManifest&, const DatasetManifest&) = default;
};

/// Seed of sample `index` within a split; splits of one base seed never share a stream.
std::uint64_t sample_seed(std::uint64_t seed, Split split, std::uint64_t index);

/// Class-balanced split: even indices are label 0, odd indices label 1. `count` must be
/// even. Work is spread over `threads` workers; the result does not depend on it.
Dataset generate(int task_id, Split split, std::uint32_t count, std::uint64_t seed, int threads = 1);

DatasetManifest manifest_for(const Dataset& ds, Split split, std::uint64_t seed,
                             std::span<const std::uint8_t> packed);

/// Writes to a temporary sibling and renames over the target.
void write_atomic(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);
void write_atomic(const std::filesystem::path& path, std::string_view text);
std::vector<std::uint8_t> read_file(const std::filesystem::path& path);

/// Runs fn(i) for i in [0, n) on up to `threads` workers; rethrows the first failure.
void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn);

}  // namespace svrt::io
