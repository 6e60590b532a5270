#include "svrt/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "svrt/rng.hpp"

namespace svrt::nn {

double relative_error(double analytic, double numeric, double floor) {
  return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), floor});
}

std::string GradReport::to_string() const {
  std::string out;
  char line[256];
  for (const auto& g : groups) {
    std::snprintf(line, sizeof line, "%-28s max_rel=%.3e at %lld (analytic %.6e, numeric %.6e, %zu coords)\n",
                  g.name.c_str(), g.max_rel_error, static_cast<long long>(g.worst_index), g.analytic, g.numeric,
                  g.checked);
    out += line;
  }
  return out;
}

GradReport grad_check(std::span<const GradTarget> targets, const std::function<double()>& loss,
                      const std::function<std::vector<Tensor<double>>()>& analytic, const GradCheckOptions& opts) {
  const std::vector<Tensor<double>> grads = analytic();
  if (grads.size() != targets.size())
    throw ShapeError("grad_check: " + std::to_string(grads.size()) + " gradients for " +
                     std::to_string(targets.size()) + " targets");
  Rng rng(opts.seed);
  GradReport report;
  for (std::size_t g = 0; g < targets.size(); ++g) {
    Tensor<double>& t = *targets[g].tensor;
    if (grads[g].size() != t.size())
      throw ShapeError("grad_check: gradient for " + targets[g].name + " has shape " +
                       shape_string(grads[g].shape()) + ", parameter " + shape_string(t.shape()));
    std::vector<Eigen::Index> coords(t.size());
    std::iota(coords.begin(), coords.end(), Eigen::Index{0});
    if (opts.max_coords && coords.size() > opts.max_coords) {
      rng.shuffle(coords);
      coords.resize(opts.max_coords);
      std::sort(coords.begin(), coords.end());
    }
    GroupReport gr{targets[g].name, 0.0, -1, 0.0, 0.0, coords.size()};
    for (Eigen::Index i : coords) {
      const double saved = t[i];
      t[i] = saved + opts.eps;
      const double up = loss();
      t[i] = saved - opts.eps;
      const double down = loss();
      t[i] = saved;
      const double numeric = (up - down) / (2.0 * opts.eps);
      const double err = relative_error(grads[g][i], numeric);
      if (err > gr.max_rel_error || gr.worst_index < 0) {
        gr.max_rel_error = err;
        gr.worst_index = i;
        gr.analytic = grads[g][i];
        gr.numeric = numeric;
      }
    }
    report.max_rel_error = std::max(report.max_rel_error, gr.max_rel_error);
    report.groups.push_back(std::move(gr));
  }
  if (opts.throw_on_mismatch && report.max_rel_error > opts.tol)
    throw GradMismatch("gradient check failed (tol " + std::to_string(opts.tol) + ")\n" + report.to_string());
  return report;
}

}  // namespace svrt::nn
