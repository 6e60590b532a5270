#pragma once

#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace svrt::taxonomy {

/// Test accuracies: one row per task, one column per condition (e.g. "small/n2000").
struct AccuracyMatrix {
  std::vector<int> tasks;
  std::vector<std::string> columns;
  Eigen::MatrixXd values;

  /// Throws DataError on NaN, duplicate column labels or mismatched sizes.
  void validate() const;
};

struct Merge {
  /// Cluster ids: leaves are 0..n-1, the k-th merge creates cluster n+k. a < b.
  int a = 0;
  int b = 0;
  double distance = 0.0;
  int size = 0;
};

struct Dendrogram {
  std::vector<Merge> merges;
  std::vector<int> leaf_order;
};

/// Ward linkage by Lance-Williams updates on squared Euclidean distances. The reported
/// height is the square root of the updated value, i.e. sqrt(2 * ESS increase). Ties go to
/// the pair whose smallest member rows are lowest. Leaf order visits, at every node, the
/// child holding the smaller row index first.
Dendrogram ward_cluster(const Eigen::MatrixXd& rows);
Dendrogram ward_cluster(const AccuracyMatrix& m);

struct PcaResult {
  Eigen::VectorXd mean;
  /// One loading vector per column, sorted by eigenvalue, largest |loading| positive.
  Eigen::MatrixXd components;
  Eigen::VectorXd eigenvalues;
  /// Eigenvalue over total variance (all components, not just the first k).
  Eigen::VectorXd explained_ratio;
  /// Centred data times components: rows x k.
  Eigen::MatrixXd projections;
};

/// Column-mean centring (and optional unit-variance scaling), covariance eigendecomposition.
/// Throws DataError when k exceeds rows or columns, or on NaN.
PcaResult pca(const Eigen::MatrixXd& m, int k, bool standardize = false);

enum class SlopeAxis { Log10, Raw, Index };

std::string_view slope_axis_name(SlopeAxis a);
SlopeAxis parse_slope_axis(std::string_view s);

struct SlopeVector {
  std::string tag;
  std::vector<int> tasks;
  Eigen::VectorXd slopes;
};

/// Least-squares slope of y on x. DegenerateError when x is constant.
double fit_slope(std::span<const double> x, std::span<const double> y);

/// Per task: ratios attn(s)/vanilla(s) regressed on the transformed sizes.
/// Inputs are tasks x sizes. DataError on non-positive vanilla accuracy.
SlopeVector slope_vector(const Eigen::MatrixXd& attn, const Eigen::MatrixXd& vanilla, std::span<const double> sizes,
                         std::vector<int> tasks, std::string tag, SlopeAxis axis = SlopeAxis::Log10);

struct Correlation {
  double r = 0.0;
  double p = 1.0;
  int n = 0;
};

/// Regularised incomplete beta I_x(a, b) by continued fraction.
double incomplete_beta(double a, double b, double x);
/// Two-sided p of Student's t with `df` degrees of freedom.
double t_two_sided_p(double t, double df);

/// Sample Pearson r with the two-sided t-test p. Needs n >= 3; DegenerateError on zero
/// variance.
Correlation pearson(std::span<const double> x, std::span<const double> y);

/// pearson(slopes, column j of projections) for every component j.
std::vector<Correlation> correlate_slopes(const SlopeVector& slopes, const Eigen::MatrixXd& projections);

}  // namespace svrt::taxonomy
