#include "svrt/taxonomy.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <set>

#include <Eigen/Eigenvalues>

#include "svrt/common.hpp"

namespace svrt::taxonomy {

void AccuracyMatrix::validate() const {
  if (values.rows() != static_cast<Eigen::Index>(tasks.size()) ||
      values.cols() != static_cast<Eigen::Index>(columns.size()))
    throw DataError("accuracy matrix is " + std::to_string(values.rows()) + "x" + std::to_string(values.cols()) +
                    " but has " + std::to_string(tasks.size()) + " task and " + std::to_string(columns.size()) +
                    " column labels");
  if (std::set<std::string>(columns.begin(), columns.end()).size() != columns.size())
    throw DataError("accuracy matrix column labels are not unique");
  if (!values.allFinite()) throw DataError("accuracy matrix contains NaN or Inf");
}

// ---------------------------------------------------------------- Ward

Dendrogram ward_cluster(const Eigen::MatrixXd& rows) {
  const int n = static_cast<int>(rows.rows());
  if (n < 2) throw DataError("ward_cluster needs at least 2 rows");
  if (!rows.allFinite()) throw DataError("ward_cluster: input contains NaN or Inf");

  Eigen::MatrixXd d2(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) d2(i, j) = (rows.row(i) - rows.row(j)).squaredNorm();

  // Slot i holds the cluster whose smallest row is i.
  std::vector<bool> active(n, true);
  std::vector<int> size(n, 1), id(n);
  for (int i = 0; i < n; ++i) id[i] = i;

  Dendrogram out;
  std::vector<std::pair<int, int>> children;
  for (int step = 0; step < n - 1; ++step) {
    int bi = -1, bj = -1;
    double best = std::numeric_limits<double>::infinity();
    for (int i = 0; i < n; ++i) {
      if (!active[i]) continue;
      for (int j = i + 1; j < n; ++j)
        if (active[j] && d2(i, j) < best) {
          best = d2(i, j);
          bi = i;
          bj = j;
        }
    }
    const int ni = size[bi], nj = size[bj];
    for (int k = 0; k < n; ++k) {
      if (!active[k] || k == bi || k == bj) continue;
      const int nk = size[k];
      const double v = ((ni + nk) * d2(k, bi) + (nj + nk) * d2(k, bj) - nk * d2(bi, bj)) / (ni + nj + nk);
      d2(k, bi) = d2(bi, k) = v;
    }
    active[bj] = false;
    size[bi] = ni + nj;
    const int a = std::min(id[bi], id[bj]), b = std::max(id[bi], id[bj]);
    out.merges.push_back({a, b, std::sqrt(std::max(best, 0.0)), ni + nj});
    children.emplace_back(id[bi], id[bj]);  // id[bi] holds the smaller row
    id[bi] = n + step;
  }

  std::function<void(int)> visit = [&](int c) {
    if (c < n) {
      out.leaf_order.push_back(c);
      return;
    }
    visit(children[c - n].first);
    visit(children[c - n].second);
  };
  visit(2 * n - 2);
  return out;
}

Dendrogram ward_cluster(const AccuracyMatrix& m) {
  m.validate();
  return ward_cluster(m.values);
}

// ---------------------------------------------------------------- PCA

PcaResult pca(const Eigen::MatrixXd& m, int k, bool standardize) {
  if (!m.allFinite()) throw DataError("pca: input contains NaN or Inf");
  if (k < 1 || k > m.rows() || k > m.cols())
    throw DataError("pca: k=" + std::to_string(k) + " needs k <= rows (" + std::to_string(m.rows()) +
                    ") and k <= columns (" + std::to_string(m.cols()) + ")");
  if (m.rows() < 2) throw DataError("pca needs at least 2 rows");
  PcaResult r;
  r.mean = m.colwise().mean().transpose();
  Eigen::MatrixXd xc = m.rowwise() - r.mean.transpose();
  if (standardize) {
    for (Eigen::Index j = 0; j < xc.cols(); ++j) {
      const double sd = std::sqrt(xc.col(j).squaredNorm() / static_cast<double>(xc.rows() - 1));
      if (sd > 0.0) xc.col(j) /= sd;
    }
  }
  const Eigen::MatrixXd cov = (xc.transpose() * xc) / static_cast<double>(xc.rows() - 1);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
  if (es.info() != Eigen::Success) throw DataError("pca: eigendecomposition failed");

  // Ascending from the solver; reverse.
  const Eigen::Index p = cov.rows();
  const Eigen::VectorXd all = es.eigenvalues().reverse().cwiseMax(0.0);
  const double total = all.sum();
  r.eigenvalues = all.head(k);
  r.explained_ratio = total > 0.0 ? Eigen::VectorXd(r.eigenvalues / total) : Eigen::VectorXd::Zero(k);
  r.components.resize(p, k);
  for (int j = 0; j < k; ++j) {
    Eigen::VectorXd v = es.eigenvectors().col(p - 1 - j);
    Eigen::Index arg = 0;
    v.cwiseAbs().maxCoeff(&arg);
    if (v[arg] < 0.0) v = -v;
    r.components.col(j) = v;
  }
  r.projections = xc * r.components;
  return r;
}

// ---------------------------------------------------------------- slopes

std::string_view slope_axis_name(SlopeAxis a) {
  switch (a) {
    case SlopeAxis::Log10: return "log10";
    case SlopeAxis::Raw: return "raw";
    case SlopeAxis::Index: return "index";
  }
  return "?";
}

SlopeAxis parse_slope_axis(std::string_view s) {
  if (s == "log10") return SlopeAxis::Log10;
  if (s == "raw") return SlopeAxis::Raw;
  if (s == "index") return SlopeAxis::Index;
  throw DataError("unknown slope axis '" + std::string(s) + "' (expected log10, raw or index)");
}

double fit_slope(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw DataError("fit_slope needs two equal-length series of length >= 2");
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  if (sxx == 0.0) throw DegenerateError("fit_slope: all abscissae are equal");
  return sxy / sxx;
}

SlopeVector slope_vector(const Eigen::MatrixXd& attn, const Eigen::MatrixXd& vanilla, std::span<const double> sizes,
                         std::vector<int> tasks, std::string tag, SlopeAxis axis) {
  if (attn.rows() != vanilla.rows() || attn.cols() != vanilla.cols())
    throw DataError("slope_vector: attention and vanilla slices differ in shape");
  if (attn.cols() != static_cast<Eigen::Index>(sizes.size()))
    throw DataError("slope_vector: " + std::to_string(sizes.size()) + " sizes for " + std::to_string(attn.cols()) +
                    " columns");
  if (static_cast<Eigen::Index>(tasks.size()) != attn.rows()) throw DataError("slope_vector: task labels do not match rows");
  if (!attn.allFinite() || !vanilla.allFinite()) throw DataError("slope_vector: NaN in accuracies");
  if ((vanilla.array() <= 0.0).any()) throw DataError("slope_vector: vanilla accuracies must be positive");
  std::vector<double> x(sizes.size());
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    if (axis == SlopeAxis::Log10 && !(sizes[i] > 0.0)) throw DataError("slope_vector: sizes must be positive");
    x[i] = axis == SlopeAxis::Log10 ? std::log10(sizes[i]) : axis == SlopeAxis::Raw ? sizes[i] : static_cast<double>(i);
  }
  SlopeVector out{std::move(tag), std::move(tasks), Eigen::VectorXd(attn.rows())};
  std::vector<double> ratio(sizes.size());
  for (Eigen::Index t = 0; t < attn.rows(); ++t) {
    for (Eigen::Index s = 0; s < attn.cols(); ++s) ratio[s] = attn(t, s) / vanilla(t, s);
    out.slopes[t] = fit_slope(x, ratio);
  }
  return out;
}

// ---------------------------------------------------------------- Pearson

namespace {

// Modified Lentz evaluation of the incomplete beta continued fraction.
double beta_cf(double a, double b, double x) {
  constexpr int kMaxIter = 500;
  constexpr double kEps = 1e-16;
  constexpr double kTiny = 1e-300;
  const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < kEps) return h;
  }
  return h;
}

}  // namespace

double incomplete_beta(double a, double b, double x) {
  if (!(a > 0.0) || !(b > 0.0)) throw DataError("incomplete_beta: a and b must be positive");
  if (!(x >= 0.0 && x <= 1.0)) throw DataError("incomplete_beta: x must lie in [0, 1]");
  if (x == 0.0 || x == 1.0) return x;
  const double ln_front =
      std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) + b * std::log1p(-x);
  const double front = std::exp(ln_front);
  if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_cf(a, b, x) / a;
  return 1.0 - front * beta_cf(b, a, 1.0 - x) / b;
}

double t_two_sided_p(double t, double df) {
  if (!(df > 0.0)) throw DataError("t_two_sided_p: degrees of freedom must be positive");
  if (std::isinf(t)) return 0.0;
  return incomplete_beta(0.5 * df, 0.5, df / (df + t * t));
}

Correlation pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw DataError("pearson: series lengths differ");
  if (x.size() < 3) throw DataError("pearson needs n >= 3");
  const Eigen::Map<const Eigen::VectorXd> xv(x.data(), static_cast<Eigen::Index>(x.size()));
  const Eigen::Map<const Eigen::VectorXd> yv(y.data(), static_cast<Eigen::Index>(y.size()));
  if (!xv.allFinite() || !yv.allFinite()) throw DataError("pearson: NaN in input");
  const Eigen::VectorXd dx = xv.array() - xv.mean();
  const Eigen::VectorXd dy = yv.array() - yv.mean();
  const double sxx = dx.squaredNorm(), syy = dy.squaredNorm();
  if (sxx == 0.0 || syy == 0.0) throw DegenerateError("pearson: zero variance");
  Correlation c;
  c.n = static_cast<int>(x.size());
  c.r = std::clamp(dx.dot(dy) / std::sqrt(sxx * syy), -1.0, 1.0);
  const double df = c.n - 2.0;
  if (std::abs(c.r) >= 1.0) {
    c.p = 0.0;
  } else {
    const double t = c.r * std::sqrt(df / (1.0 - c.r * c.r));
    c.p = t_two_sided_p(t, df);
  }
  return c;
}

std::vector<Correlation> correlate_slopes(const SlopeVector& slopes, const Eigen::MatrixXd& projections) {
  if (projections.rows() != slopes.slopes.size())
    throw DataError("correlate_slopes: " + std::to_string(slopes.slopes.size()) + " slopes for " +
                    std::to_string(projections.rows()) + " projected tasks");
  std::vector<Correlation> out;
  for (Eigen::Index j = 0; j < projections.cols(); ++j) {
    const Eigen::VectorXd col = projections.col(j);
    out.push_back(pearson({slopes.slopes.data(), static_cast<std::size_t>(slopes.slopes.size())},
                          {col.data(), static_cast<std::size_t>(col.size())}));
  }
  return out;
}

}  // namespace svrt::taxonomy
