#pragma once

#include <span>
#include <string>

#include <Eigen/Core>

#include "svrt/taxonomy.hpp"

namespace svrt::plots {

/// Dendrogram with leaves in `d.leaf_order`, labelled by `labels[row]`.
std::string dendrogram_svg(const taxonomy::Dendrogram& d, std::span<const std::string> labels);

/// First two projection columns; points coloured by each task's cluster (SD1, SD2, SR1, SR2).
std::string pca_scatter_svg(const Eigen::MatrixXd& projections, std::span<const int> tasks,
                            const Eigen::VectorXd& explained_ratio);

/// One bar per task.
std::string slope_bars_svg(const taxonomy::SlopeVector& s);

}  // namespace svrt::plots
