#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "svrt/tensor.hpp"

namespace svrt::nn {

// Forward/backward pairs for the fixed layer set. Backward functions return gradients
// with respect to every input; nothing is taped.

template <class S>
struct ConvGrads {
  Tensor<S> dx, dw, db;
};

/// Cross-correlation. x: [N,C,H,W], w: [O,C,K,K], b: [O] or empty for no bias.
template <class S>
Tensor<S> conv2d_forward(const Tensor<S>& x, const Tensor<S>& w, const Tensor<S>& b, int stride, int pad);
/// dx is left empty when `need_dx` is false.
template <class S>
ConvGrads<S> conv2d_backward(const Tensor<S>& x, const Tensor<S>& w, const Tensor<S>& dy, int stride, int pad,
                             bool has_bias = true, bool need_dx = true);

template <class S>
Tensor<S> relu_forward(const Tensor<S>& x);
/// `y` is the forward output (or input; the mask is the same).
template <class S>
Tensor<S> relu_backward(const Tensor<S>& y, const Tensor<S>& dy);

template <class S>
Tensor<S> residual_add(const Tensor<S>& a, const Tensor<S>& b);

/// [N,C,H,W] -> [N,C]
template <class S>
Tensor<S> global_avg_pool_forward(const Tensor<S>& x);
template <class S>
Tensor<S> global_avg_pool_backward(const Shape& x_shape, const Tensor<S>& dy);

template <class S>
struct MaxPoolResult {
  Tensor<S> y;
  std::vector<std::int32_t> argmax;  // flat input index per output element
};

template <class S>
MaxPoolResult<S> max_pool_forward(const Tensor<S>& x, int kernel, int stride);
template <class S>
Tensor<S> max_pool_backward(const Shape& x_shape, const std::vector<std::int32_t>& argmax, const Tensor<S>& dy);

template <class S>
struct LinearGrads {
  Tensor<S> dx, dw, db;
};

/// x: [N,D], w: [O,D], b: [O] -> [N,O]
template <class S>
Tensor<S> linear_forward(const Tensor<S>& x, const Tensor<S>& w, const Tensor<S>& b);
template <class S>
LinearGrads<S> linear_backward(const Tensor<S>& x, const Tensor<S>& w, const Tensor<S>& dy);

inline constexpr double kBatchNormMomentum = 0.9;
inline constexpr double kNormEps = 1e-5;

template <class S>
struct NormCache {
  Tensor<S> xhat;
  Eigen::Matrix<S, Eigen::Dynamic, 1> inv_std;
  bool batch_stats = true;
};

template <class S>
struct NormGrads {
  Tensor<S> dx, dgain, dbias;
};

/// Per-channel normalisation of [N,C,H,W]. In training mode batch statistics are used and
/// running stats become momentum * running + (1 - momentum) * batch (unbiased variance).
template <class S>
Tensor<S> batch_norm_forward(const Tensor<S>& x, const Tensor<S>& gamma, const Tensor<S>& beta,
                             Tensor<S>& running_mean, Tensor<S>& running_var, bool training, NormCache<S>* cache,
                             double momentum = kBatchNormMomentum, double eps = kNormEps);
template <class S>
NormGrads<S> batch_norm_backward(const NormCache<S>& cache, const Tensor<S>& gamma, const Tensor<S>& dy);

/// Normalises over the last axis, then applies gain/bias of that length.
template <class S>
Tensor<S> layernorm_forward(const Tensor<S>& x, const Tensor<S>& gain, const Tensor<S>& bias, NormCache<S>* cache,
                            double eps = kNormEps);
template <class S>
NormGrads<S> layernorm_backward(const NormCache<S>& cache, const Tensor<S>& gain, const Tensor<S>& dy);

/// Max-subtracted softmax over the last axis.
template <class S>
Tensor<S> softmax_forward(const Tensor<S>& x);
template <class S>
Tensor<S> softmax_backward(const Tensor<S>& y, const Tensor<S>& dy);

template <class S>
Tensor<S> sigmoid_forward(const Tensor<S>& x);
template <class S>
Tensor<S> sigmoid_backward(const Tensor<S>& y, const Tensor<S>& dy);

template <class S>
struct LossResult {
  S loss;
  Tensor<S> grad;  // d loss / d logits
};

/// Mean sigmoid binary cross-entropy; logits of any shape with one label each.
template <class S>
LossResult<S> bce_with_logits(const Tensor<S>& logits, std::span<const std::uint8_t> labels);

}  // namespace svrt::nn
