#include "svrt/optim.hpp"

#include <cmath>

namespace svrt::nn {

template <class S>
void adam_step(std::span<Tensor<S>* const> params, AdamState<S>& state, double lr, const AdamHyper& h) {
  if (state.m.empty()) {
    for (const Tensor<S>* p : params) {
      state.m.push_back(Tensor<S>::Vec::Zero(p->size()));
      state.v.push_back(Tensor<S>::Vec::Zero(p->size()));
    }
  }
  if (state.m.size() != params.size()) throw ShapeError("adam_step: parameter list changed between steps");
  ++state.t;
  const double c1 = 1.0 - std::pow(h.beta1, static_cast<double>(state.t));
  const double c2 = 1.0 - std::pow(h.beta2, static_cast<double>(state.t));
  const S b1 = static_cast<S>(h.beta1), b2 = static_cast<S>(h.beta2);
  const S step = static_cast<S>(lr / c1);
  const S inv_sqrt_c2 = static_cast<S>(1.0 / std::sqrt(c2));
  const S eps = static_cast<S>(h.eps);
  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor<S>& p = *params[i];
    if (state.m[i].size() != p.size())
      throw ShapeError("adam_step: parameter " + std::to_string(i) + " has shape " + shape_string(p.shape()) +
                       " but optimiser state of size " + std::to_string(state.m[i].size()));
    const auto& g = p.grad();
    state.m[i] = b1 * state.m[i] + (S(1) - b1) * g;
    state.v[i] = b2 * state.v[i] + (S(1) - b2) * g.cwiseAbs2();
    p.data().array() -= step * state.m[i].array() / (state.v[i].array().sqrt() * inv_sqrt_c2 + eps);
  }
}

template void adam_step(std::span<Tensor<float>* const>, AdamState<float>&, double, const AdamHyper&);
template void adam_step(std::span<Tensor<double>* const>, AdamState<double>&, double, const AdamHyper&);

}  // namespace svrt::nn
