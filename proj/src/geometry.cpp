#include "svrt/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace svrt::geom {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double cross(const Point& a, const Point& b) { return a.x() * b.y() - a.y() * b.x(); }

double orient(const Point& a, const Point& b, const Point& c) { return cross(b - a, c - a); }

bool on_segment(const Point& a, const Point& b, const Point& p) {
  return std::min(a.x(), b.x()) <= p.x() && p.x() <= std::max(a.x(), b.x()) &&
         std::min(a.y(), b.y()) <= p.y() && p.y() <= std::max(a.y(), b.y());
}

Point catmull_rom(const Point& p0, const Point& p1, const Point& p2, const Point& p3, double u) {
  const double u2 = u * u;
  const double u3 = u2 * u;
  return 0.5 * (2.0 * p1 + (p2 - p0) * u + (2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3) * u2 +
                (3.0 * p1 - p0 - 3.0 * p2 + p3) * u3);
}

Points centered(const Points& pts) { return pts.colwise() - centroid(pts); }

// Min over cyclic shifts / directions of the alignment residual. `stop_below` allows an
// early exit once a correspondence good enough for the caller has been found.
double best_alignment(const Points& a, const Points& b, ShapeGroup group, double stop_below) {
  const Eigen::Index n = a.cols();
  if (n != b.cols() || n == 0) return std::numeric_limits<double>::infinity();
  const double rb = radius(b);
  if (rb <= 0.0) return std::numeric_limits<double>::infinity();

  const Points B = centered(b);
  const Points A0 = centered(a);
  Points A1 = A0;
  A1.row(0) *= -1.0;

  double best = std::numeric_limits<double>::infinity();
  Points A(2, n);
  for (int m = 0; m < (group.mirror ? 2 : 1); ++m) {
    const Points& src = m == 0 ? A0 : A1;
    for (int dir = 0; dir < 2; ++dir) {
      for (Eigen::Index shift = 0; shift < n; ++shift) {
        for (Eigen::Index i = 0; i < n; ++i) {
          const Eigen::Index j = dir == 0 ? (shift + i) % n : (shift - i + n) % n;
          A.col(i) = src.col(j);
        }
        if (group.rotation) {
          double s_cross = 0.0;
          double s_dot = 0.0;
          for (Eigen::Index i = 0; i < n; ++i) {
            s_cross += cross(A.col(i), B.col(i));
            s_dot += A.col(i).dot(B.col(i));
          }
          const double theta = std::atan2(s_cross, s_dot);
          Eigen::Matrix2d R;
          R << std::cos(theta), -std::sin(theta), std::sin(theta), std::cos(theta);
          A = R * A;
        }
        if (group.scale) {
          double num = 0.0;
          double den = 0.0;
          for (Eigen::Index i = 0; i < n; ++i) {
            num += A.col(i).dot(B.col(i));
            den += A.col(i).squaredNorm();
          }
          if (den <= 0.0 || num <= 0.0) continue;
          A *= num / den;
        }
        double err = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) err += (A.col(i) - B.col(i)).norm();
        err /= static_cast<double>(n) * rb;
        best = std::min(best, err);
        if (best <= stop_below) return best;
      }
    }
  }
  return best;
}

}  // namespace

Points PlacedShape::image_points() const { return apply_transform(contour, transform); }

Point centroid(const Points& pts) {
  Point sum = Point::Zero();
  for (Eigen::Index i = 0; i < pts.cols(); ++i) sum += pts.col(i);
  return pts.cols() > 0 ? Point(sum / static_cast<double>(pts.cols())) : sum;
}

double radius(const Points& pts) {
  const Point c = centroid(pts);
  double r = 0.0;
  for (Eigen::Index i = 0; i < pts.cols(); ++i) r = std::max(r, (pts.col(i) - c).norm());
  return r;
}

double signed_area(const Points& pts) {
  const Eigen::Index n = pts.cols();
  double a = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) a += cross(pts.col(i), pts.col((i + 1) % n));
  return 0.5 * a;
}

Points convex_hull(const Points& pts) {
  std::vector<Point> p(pts.cols());
  for (Eigen::Index i = 0; i < pts.cols(); ++i) p[i] = pts.col(i);
  std::sort(p.begin(), p.end(), [](const Point& a, const Point& b) {
    return a.x() < b.x() || (a.x() == b.x() && a.y() < b.y());
  });
  if (p.size() < 3) {
    Points out(2, p.size());
    for (std::size_t i = 0; i < p.size(); ++i) out.col(i) = p[i];
    return out;
  }
  std::vector<Point> hull(2 * p.size());
  std::size_t k = 0;
  for (const auto& q : p) {
    while (k >= 2 && orient(hull[k - 2], hull[k - 1], q) <= 0) --k;
    hull[k++] = q;
  }
  for (std::size_t i = p.size() - 1, t = k + 1; i > 0; --i) {
    while (k >= t && orient(hull[k - 2], hull[k - 1], p[i - 1]) <= 0) --k;
    hull[k++] = p[i - 1];
  }
  Points out(2, k - 1);
  for (std::size_t i = 0; i + 1 < k; ++i) out.col(i) = hull[i];
  return out;
}

bool segments_intersect(const Point& p1, const Point& p2, const Point& q1, const Point& q2) {
  const double d1 = orient(q1, q2, p1);
  const double d2 = orient(q1, q2, p2);
  const double d3 = orient(p1, p2, q1);
  const double d4 = orient(p1, p2, q2);
  if (((d1 > 0 && d2 < 0) || (d1 < 0 && d2 > 0)) && ((d3 > 0 && d4 < 0) || (d3 < 0 && d4 > 0)))
    return true;
  if (d1 == 0 && on_segment(q1, q2, p1)) return true;
  if (d2 == 0 && on_segment(q1, q2, p2)) return true;
  if (d3 == 0 && on_segment(p1, p2, q1)) return true;
  if (d4 == 0 && on_segment(p1, p2, q2)) return true;
  return false;
}

double point_segment_distance(const Point& p, const Point& a, const Point& b) {
  const Point ab = b - a;
  const double len2 = ab.squaredNorm();
  if (len2 == 0.0) return (p - a).norm();
  const double t = std::clamp((p - a).dot(ab) / len2, 0.0, 1.0);
  return (p - (a + t * ab)).norm();
}

double segment_distance(const Point& p1, const Point& p2, const Point& q1, const Point& q2) {
  if (segments_intersect(p1, p2, q1, q2)) return 0.0;
  return std::min({point_segment_distance(p1, q1, q2), point_segment_distance(p2, q1, q2),
                   point_segment_distance(q1, p1, p2), point_segment_distance(q2, p1, p2)});
}

bool is_simple(const Points& pts) {
  const Eigen::Index n = pts.cols();
  if (n < 3) return false;
  for (Eigen::Index i = 0; i < n; ++i)
    if ((pts.col(i) - pts.col((i + 1) % n)).squaredNorm() == 0.0) return false;
  for (Eigen::Index i = 0; i < n; ++i) {
    const Point a1 = pts.col(i);
    const Point a2 = pts.col((i + 1) % n);
    for (Eigen::Index j = i + 2; j < n; ++j) {
      if (i == 0 && j == n - 1) continue;  // adjacent through the closing edge
      if (segments_intersect(a1, a2, pts.col(j), pts.col((j + 1) % n))) return false;
    }
  }
  return true;
}

bool point_in_polygon(const Point& p, const Points& poly) {
  bool inside = false;
  const Eigen::Index n = poly.cols();
  for (Eigen::Index i = 0, j = n - 1; i < n; j = i++) {
    const Point a = poly.col(i);
    const Point b = poly.col(j);
    if ((a.y() > p.y()) != (b.y() > p.y())) {
      const double x = (b.x() - a.x()) * (p.y() - a.y()) / (b.y() - a.y()) + a.x();
      if (p.x() < x) inside = !inside;
    }
  }
  return inside;
}

bool polylines_intersect(const Points& a, const Points& b) {
  const Eigen::Index na = a.cols();
  const Eigen::Index nb = b.cols();
  const Eigen::Vector2d amin = a.rowwise().minCoeff();
  const Eigen::Vector2d amax = a.rowwise().maxCoeff();
  const Eigen::Vector2d bmin = b.rowwise().minCoeff();
  const Eigen::Vector2d bmax = b.rowwise().maxCoeff();
  if ((amax.array() < bmin.array()).any() || (bmax.array() < amin.array()).any()) return false;
  for (Eigen::Index i = 0; i < na; ++i) {
    const Point a1 = a.col(i);
    const Point a2 = a.col((i + 1) % na);
    const double xmin = std::min(a1.x(), a2.x());
    const double xmax = std::max(a1.x(), a2.x());
    const double ymin = std::min(a1.y(), a2.y());
    const double ymax = std::max(a1.y(), a2.y());
    for (Eigen::Index j = 0; j < nb; ++j) {
      const Point b1 = b.col(j);
      const Point b2 = b.col((j + 1) % nb);
      if (std::max(b1.x(), b2.x()) < xmin || std::min(b1.x(), b2.x()) > xmax ||
          std::max(b1.y(), b2.y()) < ymin || std::min(b1.y(), b2.y()) > ymax)
        continue;
      if (segments_intersect(a1, a2, b1, b2)) return true;
    }
  }
  return false;
}

Points reflect(const Points& pts, const Point& origin, const Point& dir) {
  const Point u = dir.normalized();
  Points out(2, pts.cols());
  for (Eigen::Index i = 0; i < pts.cols(); ++i) {
    const Point d = pts.col(i) - origin;
    out.col(i) = origin + 2.0 * d.dot(u) * u - d;
  }
  return out;
}

double correspondence_error(const Points& a, const Points& b) {
  const Eigen::Index n = a.cols();
  if (n != b.cols() || n == 0) return std::numeric_limits<double>::infinity();
  double best = std::numeric_limits<double>::infinity();
  for (int dir = 0; dir < 2; ++dir) {
    for (Eigen::Index shift = 0; shift < n; ++shift) {
      double err = 0.0;
      for (Eigen::Index i = 0; i < n && err < best * static_cast<double>(n); ++i) {
        const Eigen::Index j = dir == 0 ? (shift + i) % n : (shift - i + n) % n;
        err += (a.col(j) - b.col(i)).norm();
      }
      best = std::min(best, err / static_cast<double>(n));
    }
  }
  return best;
}

Contour sample_contour(Rng& rng, int n_anchor, double irregularity, std::uint64_t id) {
  if (n_anchor < 5) throw std::invalid_argument("sample_contour: n_anchor must be >= 5");
  if (!(irregularity >= 0.0 && irregularity <= 1.0))
    throw std::invalid_argument("sample_contour: irregularity must be in [0, 1]");

  const double sector = kTwoPi / n_anchor;
  std::vector<Point> anchors(n_anchor);
  for (int attempt = 0; attempt < 1000; ++attempt) {
    const double offset = rng.uniform(0.0, kTwoPi);
    for (int k = 0; k < n_anchor; ++k) {
      const double angle = offset + sector * (k + irregularity * rng.uniform(-0.35, 0.35));
      const double r = rng.uniform(1.0 - irregularity, 1.0);
      anchors[k] = Point(r * std::cos(angle), r * std::sin(angle));
    }
    Points pts(2, kContourSamples);
    for (int i = 0; i < kContourSamples; ++i) {
      const double t = static_cast<double>(i) * n_anchor / kContourSamples;
      const int s = static_cast<int>(t);
      const double u = t - s;
      pts.col(i) = catmull_rom(anchors[(s + n_anchor - 1) % n_anchor], anchors[s % n_anchor],
                               anchors[(s + 1) % n_anchor], anchors[(s + 2) % n_anchor], u);
    }
    pts = centered(pts);
    double rmax = 0.0;
    for (Eigen::Index i = 0; i < pts.cols(); ++i) rmax = std::max(rmax, pts.col(i).norm());
    if (rmax <= 0.0) continue;
    pts /= rmax;
    if (!is_simple(pts)) continue;
    return Contour{std::move(pts), id};
  }
  throw SynthesisExhausted("sample_contour: no simple closed curve after 1000 attempts");
}

Points apply_transform(const Points& pts, const Transform& t) {
  Eigen::Matrix2d M;
  const double c = std::cos(t.rotation);
  const double s = std::sin(t.rotation);
  M << c, -s, s, c;
  M *= t.scale;
  if (t.mirror) M.col(0) *= -1.0;
  return (M * pts).colwise() + t.translation;
}

bool contains(const Points& outer, const Points& inner) {
  if (polylines_intersect(outer, inner)) return false;
  for (Eigen::Index i = 0; i < inner.cols(); ++i)
    if (!point_in_polygon(inner.col(i), outer)) return false;
  return true;
}

double border_distance(const Points& a, const Points& b) {
  if (polylines_intersect(a, b)) return 0.0;
  double best = std::numeric_limits<double>::infinity();
  const Eigen::Index na = a.cols();
  const Eigen::Index nb = b.cols();
  for (Eigen::Index i = 0; i < na; ++i) {
    const Point a1 = a.col(i);
    const Point a2 = a.col((i + 1) % na);
    const Point alo = a1.cwiseMin(a2);
    const Point ahi = a1.cwiseMax(a2);
    for (Eigen::Index j = 0; j < nb; ++j) {
      const Point b1 = b.col(j);
      const Point b2 = b.col((j + 1) % nb);
      // Box gap lower-bounds the segment distance.
      const Point gap = (b1.cwiseMin(b2) - ahi).cwiseMax(alo - b1.cwiseMax(b2)).cwiseMax(0.0);
      if (gap.squaredNorm() >= best * best) continue;
      best = std::min({best, point_segment_distance(a1, b1, b2), point_segment_distance(a2, b1, b2),
                       point_segment_distance(b1, a1, a2), point_segment_distance(b2, a1, a2)});
    }
  }
  return best;
}

double alignment_error(const Points& a, const Points& b, ShapeGroup group) {
  return best_alignment(a, b, group, -1.0);
}

bool same_shape(const Points& a, const Points& b, ShapeGroup group, double tol) {
  if (!(tol > 0.0)) throw std::invalid_argument("same_shape: tol must be positive");
  return best_alignment(a, b, group, tol) <= tol;
}

bool symmetric_arrangement(std::span<const Points> shapes, double tol) {
  const std::size_t n = shapes.size();
  if (n < 2) throw std::invalid_argument("symmetric_arrangement: needs at least two shapes");

  std::vector<Point> cents(n);
  Point mean = Point::Zero();
  for (std::size_t i = 0; i < n; ++i) {
    cents[i] = centroid(shapes[i]);
    mean += cents[i];
  }
  mean /= static_cast<double>(n);

  struct Axis {
    Point origin;
    Point dir;
  };
  std::vector<Axis> axes;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const Point d = cents[j] - cents[i];
      if (d.norm() > 1e-9) axes.push_back({0.5 * (cents[i] + cents[j]), Point(-d.y(), d.x())});
    }
    const Point d = mean - cents[i];
    if (d.norm() > 1e-9) axes.push_back({cents[i], d});
  }

  std::vector<char> ok(n * n);
  std::vector<char> used(n);
  for (const auto& axis : axes) {
    for (std::size_t i = 0; i < n; ++i) {
      const Points r = reflect(shapes[i], axis.origin, axis.dir);
      const Point rc = centroid(r);
      for (std::size_t j = 0; j < n; ++j) {
        // The centroid gap lower-bounds the mean point error.
        ok[i * n + j] = (rc - cents[j]).norm() <= tol && correspondence_error(r, shapes[j]) <= tol;
      }
    }
    std::fill(used.begin(), used.end(), 0);
    auto assign = [&](auto&& self, std::size_t i) -> bool {
      if (i == n) return true;
      for (std::size_t j = 0; j < n; ++j) {
        if (used[j] || !ok[i * n + j]) continue;
        used[j] = 1;
        if (self(self, i + 1)) return true;
        used[j] = 0;
      }
      return false;
    };
    if (assign(assign, 0)) return true;
  }
  return false;
}

bool contains(const PlacedShape& outer, const PlacedShape& inner) {
  return contains(outer.image_points(), inner.image_points());
}

double border_distance(const PlacedShape& a, const PlacedShape& b) {
  return border_distance(a.image_points(), b.image_points());
}

bool same_shape(const PlacedShape& a, const PlacedShape& b, ShapeGroup group, double tol) {
  return same_shape(a.image_points(), b.image_points(), group, tol);
}

bool symmetric_arrangement(std::span<const PlacedShape> shapes, double tol) {
  std::vector<Points> pts;
  pts.reserve(shapes.size());
  for (const auto& s : shapes) pts.push_back(s.image_points());
  return symmetric_arrangement(std::span<const Points>(pts), tol);
}

}  // namespace svrt::geom
