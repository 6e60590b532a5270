#pragma once

// Brute-force reference implementations. They share no code paths with the functions
// they check beyond the contour sampler and the line rasteriser.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <queue>
#include <vector>

#include <Eigen/Core>

#include "svrt/geometry.hpp"
#include "svrt/raster.hpp"
#include "svrt/rng.hpp"

namespace oracle {

using svrt::geom::Point;
using svrt::geom::Points;

// ---------------------------------------------------------------- random placement

inline svrt::geom::PlacedShape random_placed(svrt::Rng& rng, double scale_lo, double scale_hi,
                                              std::optional<Point> at = std::nullopt) {
  svrt::geom::PlacedShape s;
  s.contour = svrt::geom::sample_contour(rng, rng.integer(6, 10), rng.uniform(0.2, 0.8));
  s.transform.scale = rng.uniform(scale_lo, scale_hi);
  s.transform.rotation = rng.uniform(0.0, 2.0 * std::numbers::pi);
  s.transform.mirror = rng.coin();
  const double m = s.transform.scale + 3.0;
  s.transform.translation = at ? *at : Point(rng.uniform(m, 128.0 - m), rng.uniform(m, 128.0 - m));
  return s;
}

// ---------------------------------------------------------------- contains: flood fill

enum class Inside { No, Yes, Ambiguous };

/// Rasterises `outer` at `size` px (frame 128), floods the exterior from the corner and
/// classifies densely sampled points of `inner`. Points on or next to the stroke make the
/// answer ambiguous.
inline Inside flood_fill_contains(const Points& outer, const Points& inner, int size = 512) {
  const double k = size / 128.0;
  svrt::io::Image img(size, size);
  svrt::io::draw_polyline(img, outer * k);
  std::vector<std::uint8_t> outside(static_cast<std::size_t>(size) * size, 0);
  std::queue<std::pair<int, int>> q;
  auto push = [&](int r, int c) {
    if (r < 0 || c < 0 || r >= size || c >= size) return;
    const std::size_t i = static_cast<std::size_t>(r) * size + c;
    if (outside[i] || img.at(r, c) == svrt::io::kInk) return;
    outside[i] = 1;
    q.push({r, c});
  };
  for (int i = 0; i < size; ++i) {
    push(0, i);
    push(size - 1, i);
    push(i, 0);
    push(i, size - 1);
  }
  while (!q.empty()) {
    const auto [r, c] = q.front();
    q.pop();
    push(r + 1, c);
    push(r - 1, c);
    push(r, c + 1);
    push(r, c - 1);
  }
  bool any_out = false, any_edge = false;
  const Eigen::Index n = inner.cols();
  for (Eigen::Index i = 0; i < n; ++i) {
    const Point a = inner.col(i) * k, b = inner.col((i + 1) % n) * k;
    for (int s = 0; s < 8; ++s) {
      const Point p = a + (b - a) * (s / 8.0);
      const int c = static_cast<int>(std::floor(p.x())), r = static_cast<int>(std::floor(p.y()));
      if (r < 1 || c < 1 || r >= size - 1 || c >= size - 1) {
        any_out = true;
        continue;
      }
      for (int dr = -1; dr <= 1; ++dr)
        for (int dc = -1; dc <= 1; ++dc)
          if (img.at(r + dr, c + dc) == svrt::io::kInk) any_edge = true;
      if (outside[static_cast<std::size_t>(r) * size + c]) any_out = true;
    }
  }
  if (any_edge) return Inside::Ambiguous;
  return any_out ? Inside::No : Inside::Yes;
}

// ---------------------------------------------------------------- border distance: dense sampling

/// `count` points spread along the closed polyline in proportion to arc length.
inline Eigen::Matrix2Xd dense_samples(const Points& poly, int count) {
  const Eigen::Index n = poly.cols();
  std::vector<double> cum(n + 1, 0.0);
  for (Eigen::Index i = 0; i < n; ++i) cum[i + 1] = cum[i] + (poly.col((i + 1) % n) - poly.col(i)).norm();
  Eigen::Matrix2Xd out(2, count);
  Eigen::Index seg = 0;
  for (int s = 0; s < count; ++s) {
    const double t = cum[n] * s / count;
    while (seg + 1 < n && cum[seg + 1] <= t) ++seg;
    const double len = cum[seg + 1] - cum[seg];
    const double u = len > 0 ? (t - cum[seg]) / len : 0.0;
    out.col(s) = poly.col(seg) + u * (poly.col((seg + 1) % n) - poly.col(seg));
  }
  return out;
}

/// Minimum distance over all pairs of `count` samples per contour.
inline double dense_border_distance(const Points& a, const Points& b, int count = 10000) {
  const Eigen::Matrix2Xd pa = dense_samples(a, count), pb = dense_samples(b, count);
  const Eigen::RowVectorXd nb = pb.colwise().squaredNorm();
  double best = std::numeric_limits<double>::infinity();
  constexpr int kBlock = 256;
  for (int s = 0; s < count; s += kBlock) {
    const int len = std::min(kBlock, count - s);
    const Eigen::Matrix2Xd blk = pa.middleCols(s, len);
    Eigen::MatrixXd d2 = (-2.0 * blk.transpose() * pb).rowwise() + nb;
    d2.colwise() += blk.colwise().squaredNorm().transpose();
    best = std::min(best, d2.minCoeff());
  }
  return std::sqrt(std::max(0.0, best));
}

// ---------------------------------------------------------------- symmetry: axis enumeration

inline Point mean_point(const Points& p) {
  Point s = Point::Zero();
  for (Eigen::Index i = 0; i < p.cols(); ++i) s += p.col(i);
  return s / static_cast<double>(p.cols());
}

/// Mean vertex distance minimised over cyclic shifts and both traversal directions.
inline double matched_error(const Points& a, const Points& b) {
  const Eigen::Index n = a.cols();
  double best = std::numeric_limits<double>::infinity();
  for (int dir = 0; dir < 2; ++dir)
    for (Eigen::Index shift = 0; shift < n; ++shift) {
      double sum = 0.0;
      for (Eigen::Index i = 0; i < n; ++i) {
        const Eigen::Index j = dir ? (shift - i + n) % n : (shift + i) % n;
        sum += (a.col(i) - b.col(j)).norm();
      }
      best = std::min(best, sum / n);
    }
  return best;
}

/// Worst pairing error of the best shape assignment after reflecting every shape across the
/// line through `origin` at angle `theta`.
inline double axis_error(const std::vector<Points>& shapes, const Point& origin, double theta) {
  const std::size_t n = shapes.size();
  const Point u(std::cos(theta), std::sin(theta));
  const Eigen::Matrix2d refl = 2.0 * u * u.transpose() - Eigen::Matrix2d::Identity();
  std::vector<Point> cents(n);
  for (std::size_t i = 0; i < n; ++i) cents[i] = mean_point(shapes[i]);
  Eigen::MatrixXd cost(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    const Points r = (refl * (shapes[i].colwise() - origin)).colwise() + origin;
    const Point rc = mean_point(r);
    for (std::size_t j = 0; j < n; ++j) {
      const double gap = (rc - cents[j]).norm();
      // Matching is only informative when the centroids are close.
      cost(i, j) = gap > 20.0 ? gap : std::max(gap, matched_error(r, shapes[j]));
    }
  }
  std::vector<int> perm(n);
  for (std::size_t i = 0; i < n; ++i) perm[i] = static_cast<int>(i);
  double best = std::numeric_limits<double>::infinity();
  do {
    double worst = 0.0;
    for (std::size_t i = 0; i < n; ++i) worst = std::max(worst, cost(i, perm[i]));
    best = std::min(best, worst);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

/// Smallest axis_error over axes through the mean centroid: 180 one-degree candidates, each
/// refined by golden-section search within its bracket.
inline double symmetry_error(const std::vector<Points>& shapes) {
  Point origin = Point::Zero();
  for (const auto& s : shapes) origin += mean_point(s);
  origin /= static_cast<double>(shapes.size());
  constexpr double kDeg = std::numbers::pi / 180.0;
  std::vector<std::pair<double, double>> coarse;
  for (int a = 0; a < 180; ++a) coarse.push_back({axis_error(shapes, origin, a * kDeg), a * kDeg});
  std::sort(coarse.begin(), coarse.end());
  double best = coarse.front().first;
  const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
  for (int c = 0; c < 4; ++c) {
    double lo = coarse[c].second - kDeg, hi = coarse[c].second + kDeg;
    double x1 = hi - phi * (hi - lo), x2 = lo + phi * (hi - lo);
    double f1 = axis_error(shapes, origin, x1), f2 = axis_error(shapes, origin, x2);
    for (int it = 0; it < 40; ++it) {
      if (f1 < f2) {
        hi = x2;
        x2 = x1;
        f2 = f1;
        x1 = hi - phi * (hi - lo);
        f1 = axis_error(shapes, origin, x1);
      } else {
        lo = x1;
        x1 = x2;
        f1 = f2;
        x2 = lo + phi * (hi - lo);
        f2 = axis_error(shapes, origin, x2);
      }
    }
    best = std::min({best, f1, f2});
  }
  return best;
}

/// Random scene of 2-4 shapes: mirror-symmetric about a random axis, or that arrangement
/// with one shape displaced or replaced.
inline std::vector<Points> symmetry_scene(svrt::Rng& rng, bool symmetric) {
  const int pairs = rng.integer(1, 2);
  const Point c(rng.uniform(50.0, 78.0), rng.uniform(50.0, 78.0));
  const double theta = rng.uniform(0.0, std::numbers::pi);
  const Point u(std::cos(theta), std::sin(theta)), nrm(-std::sin(theta), std::cos(theta));
  const Eigen::Matrix2d refl = 2.0 * u * u.transpose() - Eigen::Matrix2d::Identity();
  std::vector<Points> out;
  for (int p = 0; p < pairs; ++p) {
    const Point at = c + nrm * rng.uniform(14.0, 24.0) + u * (p ? 22.0 : -22.0) * (pairs - 1);
    const auto s = random_placed(rng, 5.0, 9.0, at);
    const Points a = s.image_points();
    out.push_back(a);
    out.push_back((refl * (a.colwise() - c)).colwise() + c);
  }
  if (!symmetric) {
    const std::size_t k = rng.index(out.size());
    if (rng.coin()) {
      const double ang = rng.uniform(0.0, 2.0 * std::numbers::pi);
      out[k] = out[k].colwise() + Point(std::cos(ang), std::sin(ang)) * rng.uniform(6.0, 12.0);
    } else {
      out[k] = random_placed(rng, 5.0, 9.0, mean_point(out[k])).image_points();
    }
  }
  return out;
}

// ---------------------------------------------------------------- simple-curve check

inline bool proper_cross(const Point& p1, const Point& p2, const Point& q1, const Point& q2) {
  auto orient = [](const Point& a, const Point& b, const Point& c) {
    return (b.x() - a.x()) * (c.y() - a.y()) - (b.y() - a.y()) * (c.x() - a.x());
  };
  const double d1 = orient(q1, q2, p1), d2 = orient(q1, q2, p2), d3 = orient(p1, p2, q1), d4 = orient(p1, p2, q2);
  return ((d1 > 0) != (d2 > 0)) && ((d3 > 0) != (d4 > 0)) && d1 != 0 && d2 != 0 && d3 != 0 && d4 != 0;
}

/// O(n^2) check that no two non-adjacent edges cross.
inline bool brute_simple(const Points& p) {
  const Eigen::Index n = p.cols();
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 2; j < n; ++j) {
      if (i == 0 && j == n - 1) continue;
      if (proper_cross(p.col(i), p.col((i + 1) % n), p.col(j), p.col((j + 1) % n))) return false;
    }
  return true;
}

inline double shoelace(const Points& p) {
  double a = 0.0;
  for (Eigen::Index i = 0; i < p.cols(); ++i) {
    const Eigen::Index j = (i + 1) % p.cols();
    a += p(0, i) * p(1, j) - p(0, j) * p(1, i);
  }
  return 0.5 * a;
}

}  // namespace oracle
