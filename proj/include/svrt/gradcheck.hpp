#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "svrt/tensor.hpp"

namespace svrt::nn {

struct GradTarget {
  std::string name;
  Tensor<double>* tensor = nullptr;
};

struct GroupReport {
  std::string name;
  double max_rel_error = 0.0;
  Eigen::Index worst_index = -1;
  double analytic = 0.0;
  double numeric = 0.0;
  std::size_t checked = 0;
};

struct GradReport {
  std::vector<GroupReport> groups;
  double max_rel_error = 0.0;

  std::string to_string() const;
};

/// |a - n| / max(|a|, |n|, floor). The floor keeps coordinates whose true gradient is
/// essentially zero from reporting pure rounding noise as relative error.
inline constexpr double kRelErrorFloor = 1e-3;
double relative_error(double analytic, double numeric, double floor = kRelErrorFloor);

struct GradCheckOptions {
  double eps = 1e-5;
  double tol = 1e-6;
  /// Coordinates checked per group; 0 checks all. Larger groups are subsampled with a
  /// fixed seed.
  std::size_t max_coords = 0;
  std::uint64_t seed = 0;
  bool throw_on_mismatch = true;
};

/// Compares `analytic()` (one gradient per target, same order) with central differences
/// of `loss()`. Throws GradMismatch when any group exceeds tol (unless disabled).
GradReport grad_check(std::span<const GradTarget> targets, const std::function<double()>& loss,
                      const std::function<std::vector<Tensor<double>>()>& analytic,
                      const GradCheckOptions& opts = {});

}  // namespace svrt::nn
