#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "svrt/tensor.hpp"

namespace svrt::nn {

struct AdamHyper {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

template <class S>
struct AdamState {
  std::vector<typename Tensor<S>::Vec> m, v;
  std::int64_t t = 0;
};

/// One bias-corrected Adam step over `params` using their gradients; increments state.t.
/// State buffers are allocated on the first call and must keep matching shapes.
template <class S>
void adam_step(std::span<Tensor<S>* const> params, AdamState<S>& state, double lr, const AdamHyper& h = {});

}  // namespace svrt::nn
