#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "svrt/rng.hpp"

namespace svrt::geom {

using Point = Eigen::Vector2d;
/// One column per vertex.
using Points = Eigen::Matrix<double, 2, Eigen::Dynamic>;

/// Number of samples taken along the closing spline of every generated contour.
inline constexpr int kContourSamples = 64;

/// Closed, simple polyline in unit-shape space: vertex centroid at the origin, max radius 1.
struct Contour {
  Points points;
  std::uint64_t id = 0;
};

/// Applied as mirror (x -> -x), then rotation, then scale, then translation.
struct Transform {
  Point translation = Point::Zero();
  double rotation = 0.0;
  double scale = 1.0;
  bool mirror = false;
};

struct PlacedShape {
  Contour contour;
  Transform transform;

  Points image_points() const;
};

/// Transform groups for shape identity. Translation is always included.
struct ShapeGroup {
  bool rotation = false;
  bool scale = false;
  bool mirror = false;

  static constexpr ShapeGroup translation() { return {}; }
  static constexpr ShapeGroup rigid() { return {true, false, false}; }
  static constexpr ShapeGroup similarity() { return {true, true, false}; }
  static constexpr ShapeGroup full() { return {true, true, true}; }

  friend bool operator==(const ShapeGroup&, const ShapeGroup&) = default;
};

inline constexpr double kDefaultSameShapeTol = 0.02;

/// Random smooth closed contour: jittered anchors joined by a closed Catmull-Rom spline.
/// Throws SynthesisExhausted when 1000 attempts fail to produce a simple curve.
Contour sample_contour(Rng& rng, int n_anchor, double irregularity, std::uint64_t id = 0);

Points apply_transform(const Points& pts, const Transform& t);
inline Points apply_transform(const Contour& c, const Transform& t) {
  return apply_transform(c.points, t);
}

// Polygon helpers. All reductions run in vertex order.
Point centroid(const Points& pts);
double radius(const Points& pts);
double signed_area(const Points& pts);
Points convex_hull(const Points& pts);
bool is_simple(const Points& pts);
bool segments_intersect(const Point& p1, const Point& p2, const Point& q1, const Point& q2);
double point_segment_distance(const Point& p, const Point& a, const Point& b);
double segment_distance(const Point& p1, const Point& p2, const Point& q1, const Point& q2);
/// Even-odd rule; points on the boundary may go either way.
bool point_in_polygon(const Point& p, const Points& poly);
bool polylines_intersect(const Points& a, const Points& b);
/// Reflects across the line through `origin` with direction `dir`.
Points reflect(const Points& pts, const Point& origin, const Point& dir);
/// Mean distance between corresponding vertices, minimised over cyclic shifts and
/// traversal direction. No alignment transform is applied.
double correspondence_error(const Points& a, const Points& b);

bool contains(const Points& outer, const Points& inner);
double border_distance(const Points& a, const Points& b);
/// Mean point error after optimal alignment of a onto b within the group, divided by radius(b).
double alignment_error(const Points& a, const Points& b, ShapeGroup group);
bool same_shape(const Points& a, const Points& b, ShapeGroup group, double tol = kDefaultSameShapeTol);
bool symmetric_arrangement(std::span<const Points> shapes, double tol);

bool contains(const PlacedShape& outer, const PlacedShape& inner);
double border_distance(const PlacedShape& a, const PlacedShape& b);
bool same_shape(const PlacedShape& a, const PlacedShape& b, ShapeGroup group,
                double tol = kDefaultSameShapeTol);
bool symmetric_arrangement(std::span<const PlacedShape> shapes, double tol);

}  // namespace svrt::geom
