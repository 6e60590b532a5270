#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "svrt/model.hpp"

namespace svrt::nn {

inline constexpr char kCheckpointMagic[5] = {'S', 'V', 'R', 'T', 'W'};
inline constexpr std::uint8_t kCheckpointVersion = 1;

struct NamedTensor {
  std::string name;
  Tensor<float> tensor;
};

/// magic, u8 version, u32 count, then per tensor: u16 name length, name, u8 rank,
/// u32 dims, f32 payload. Little-endian throughout.
std::vector<std::uint8_t> encode_checkpoint(std::span<const NamedTensor> tensors);
/// Throws FormatError (with byte offset) on bad magic, version, truncation or trailing bytes.
std::vector<NamedTensor> decode_checkpoint(std::span<const std::uint8_t> bytes);

/// Every parameter and buffer of the model, in registration order, as f32.
template <class S>
std::vector<NamedTensor> model_state(const Model<S>& model);
/// Copies tensors into the model by name. With `backbone_only` the classifier is left
/// untouched. Throws ConfigError on a missing name or shape mismatch.
template <class S>
void load_model_state(Model<S>& model, std::span<const NamedTensor> state, bool backbone_only = false);

void save_checkpoint(const std::filesystem::path& path, std::span<const NamedTensor> tensors);
std::vector<NamedTensor> load_checkpoint(const std::filesystem::path& path);

}  // namespace svrt::nn
