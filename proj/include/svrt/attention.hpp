#pragma once

#include <string_view>
#include <vector>

#include "svrt/layers.hpp"
#include "svrt/rng.hpp"

namespace svrt::nn {

enum class AttentionKind { None, SAM, FBAM };

std::string_view attention_name(AttentionKind k);
/// "none", "sam" or "fbam"; throws ConfigError otherwise.
AttentionKind parse_attention(std::string_view s);

struct AttentionConfig {
  AttentionKind kind = AttentionKind::SAM;
  int d = 512;
  int n_heads = 4;
  int insert_after_block = 2;
  /// Scale logits by sqrt(token length) instead of sqrt(d).
  bool scale_by_tokens = false;
  /// Attend over the token axis (a T x T map) instead of the d x d map over projected rows.
  bool spatial_tokens = false;

  /// SAM: d=512, 4 heads, after block 2. FBAM: d=196, 1 head, after block 3.
  static AttentionConfig defaults(AttentionKind kind);

  friend bool operator==(const AttentionConfig&, const AttentionConfig&) = default;
};

/// The core acts on an R x T matrix: rows are mixed by the projections, layer norm runs
/// over T. SAM uses R = channels, T = positions; FBAM the transpose.
struct TokenLayout {
  int rows = 0;
  int tokens = 0;
};
TokenLayout token_layout(AttentionKind kind, int channels, int height, int width);

template <class S>
struct AttentionWeights {
  Tensor<S> wq, wk, wv;  // [n_H, d, R]
  Tensor<S> wo;          // [R, n_H * d]
  Tensor<S> gain, bias;  // [T]

  std::vector<Tensor<S>*> tensors() { return {&wq, &wk, &wv, &wo, &gain, &bias}; }
  std::vector<const Tensor<S>*> tensors() const { return {&wq, &wk, &wv, &wo, &gain, &bias}; }
  std::int64_t parameter_count() const;
};

/// Projections uniform in +-1/sqrt(fan_in); gain 1, bias 0.
template <class S>
AttentionWeights<S> init_attention(const AttentionConfig& cfg, TokenLayout layout, Rng& rng);

/// n_H * 3 * d * R + R * n_H * d + 2 * T
std::int64_t attention_parameter_count(const AttentionConfig& cfg, TokenLayout layout);

template <class S>
struct CoreCache {
  typename Tensor<S>::RowMat x, concat;
  std::vector<typename Tensor<S>::RowMat> q, k, v, attn;
  NormCache<S> norm;
};

/// Y = LayerNorm(W^O Concat_i(softmax(Q_i K_i^T / scale) V_i) + X) for one R x T matrix.
template <class S>
typename Tensor<S>::RowMat attention_core(const AttentionConfig& cfg, const typename Tensor<S>::RowMat& x,
                                          const AttentionWeights<S>& w, CoreCache<S>* cache = nullptr);

/// Returns d/dX and accumulates weight gradients into `dw` (which must be zero-initialised).
template <class S>
typename Tensor<S>::RowMat attention_core_backward(const AttentionConfig& cfg, const CoreCache<S>& cache,
                                                   const AttentionWeights<S>& w,
                                                   const typename Tensor<S>::RowMat& dy, AttentionWeights<S>& dw);

template <class S>
struct AttentionCache {
  std::vector<CoreCache<S>> samples;
  Shape x_shape;
};

/// x: [N, C, H, W] -> same shape.
template <class S>
Tensor<S> sam_forward(const Tensor<S>& x, const AttentionWeights<S>& w, AttentionCache<S>* cache = nullptr,
                      const AttentionConfig& cfg = AttentionConfig::defaults(AttentionKind::SAM));
template <class S>
Tensor<S> fbam_forward(const Tensor<S>& x, const AttentionWeights<S>& w, AttentionCache<S>* cache = nullptr,
                       const AttentionConfig& cfg = AttentionConfig::defaults(AttentionKind::FBAM));
/// Dispatches on cfg.kind (SAM or FBAM).
template <class S>
Tensor<S> attention_forward(const AttentionConfig& cfg, const Tensor<S>& x, const AttentionWeights<S>& w,
                            AttentionCache<S>* cache = nullptr);

template <class S>
struct AttentionGrads {
  Tensor<S> dx;
  AttentionWeights<S> dw;
};

template <class S>
AttentionGrads<S> attention_backward(const AttentionConfig& cfg, const AttentionCache<S>& cache,
                                     const AttentionWeights<S>& w, const Tensor<S>& dy);

}  // namespace svrt::nn
