#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "svrt/attention.hpp"
#include "svrt/layers.hpp"

namespace svrt::nn {

enum class DepthTier { Tiny, Small, Medium };

std::string_view tier_name(DepthTier t);
/// "tiny", "small" or "medium"; throws ConfigError otherwise.
DepthTier parse_tier(std::string_view s);
/// tiny=1, small=2, medium=3 residual blocks per stage.
int blocks_per_stage(DepthTier t);

struct ModelConfig {
  DepthTier depth_tier = DepthTier::Small;
  std::vector<int> block_channels{16, 32, 64, 128};
  int input_size = 64;
  /// Stride of the first residual stage; later stages always halve the map.
  int first_stage_stride = 2;
  /// kind None means a vanilla network.
  AttentionConfig attention{AttentionKind::None, 0, 0, 0, false, false};

  int attention_block_index() const { return attention.insert_after_block; }
  /// Spatial side length at the output of stage `block` (1-based).
  int stage_size(int block) const;

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

/// Wires `cfg` after stage cfg.insert_after_block (0 selects the kind's default).
/// kind None strips attention. Throws ConfigError on an invalid placement or size.
ModelConfig insert_attention(ModelConfig model, AttentionConfig cfg);

template <class S>
struct Param {
  std::string name;
  Tensor<S>* tensor = nullptr;
  /// Running statistics: saved and checksummed, never optimised.
  bool buffer = false;
  /// Part of the convolutional/attention backbone (everything but the classifier).
  bool backbone = true;
};

/// Mini residual network: 3x3 stem conv + BN + ReLU + 2x2 max pool, four residual stages,
/// optional attention after one stage, global average pool and a single logit.
template <class S>
class Model {
 public:
  Model(const ModelConfig& cfg, std::uint64_t seed);
  ~Model();
  Model(Model&&) noexcept;
  Model& operator=(Model&&) noexcept;

  const ModelConfig& config() const { return cfg_; }

  /// x: [N, 1, input_size, input_size] -> logits [N]. Caches activations for backward when
  /// `keep_cache` is set. A frozen backbone always runs batch norm in inference mode.
  Tensor<S> forward(const Tensor<S>& x, bool training, bool keep_cache = true);
  /// Accumulates parameter gradients for the last cached forward.
  void backward(const Tensor<S>& dlogits);

  /// Backbone output (pooled features, [N, C]) in inference mode.
  Tensor<S> features(const Tensor<S>& x);
  /// Classifier on pooled features -> logits [N]; caches its input when `keep_cache`.
  Tensor<S> head_forward(const Tensor<S>& feats, bool keep_cache = true);
  /// Accumulates classifier gradients; returns d/dfeatures.
  Tensor<S> head_backward(const Tensor<S>& dlogits);

  /// All parameters and buffers in a fixed order.
  const std::vector<Param<S>>& params() const { return params_; }
  /// Tensors the optimiser should update (respects the backbone freeze).
  std::vector<Tensor<S>*> trainable();
  void zero_grad();

  void freeze_backbone(bool frozen) { frozen_ = frozen; }
  bool backbone_frozen() const { return frozen_; }

  /// Number of trainable scalars (buffers excluded, freeze ignored).
  std::int64_t parameter_count() const;
  std::int64_t attention_parameter_count() const;

  /// FNV-1a over names, shapes and values of every backbone tensor (buffers included).
  std::uint64_t backbone_checksum() const;

 private:
  struct Impl;
  ModelConfig cfg_;
  std::unique_ptr<Impl> impl_;
  std::vector<Param<S>> params_;
  bool frozen_ = false;
};

extern template class Model<float>;
extern template class Model<double>;

}  // namespace svrt::nn
