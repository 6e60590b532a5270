#include "svrt/tasks.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstring>
#include <functional>
#include <numbers>
#include <stdexcept>
#include <string>

#include "svrt/common.hpp"

namespace svrt::tasks {

using geom::Contour;
using geom::PlacedShape;
using geom::Point;
using geom::Points;
using geom::ShapeGroup;
using geom::Transform;

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kTwoPi = 2.0 * std::numbers::pi;

constexpr double kContact = 1.5;
constexpr double kSeparation = 4.5;  // 3x the contact threshold
constexpr double kNearLo = 2.0;
constexpr double kNearHi = 6.0;
constexpr double kFarMin = 18.0;
constexpr double kEqualTol = 1.5;  // equidistance, collinearity, symmetry, square, offset
constexpr double kSizeRatio = 2.0;
constexpr double kGroupGap = 10.0;  // between separate contact groups (task 3)
constexpr int kMaxAttempts = 10000;

constexpr std::array<TaskSpec, kNumTasks> kSpecs{{
    {1, Cluster::SD2, "two shapes: identical up to translation vs different", 2, 2},
    {2, Cluster::SR2, "small shape inside a large one: near its border vs far from it", 2, 2},
    {3, Cluster::SR2, "four shapes: three in contact and one apart vs two pairs in contact", 4, 4},
    {4, Cluster::SR2, "two shapes: the small one inside the large one vs outside", 2, 2},
    {5, Cluster::SD2, "four shapes: two pairs of identical shapes vs all different", 4, 4},
    {6, Cluster::SD2, "two pairs of identical shapes: equal distance within each pair vs not", 4, 4},
    {7, Cluster::SD1, "six shapes: three pairs of identical shapes vs two triplets", 6, 6},
    {8, Cluster::SR2, "a shape and its mirror image: placed symmetrically vs offset", 2, 2},
    {9, Cluster::SR1, "three aligned shapes: the large one between the small ones vs at an end", 3, 3},
    {10, Cluster::SR2, "four shapes: centres on the corners of a square vs not", 4, 4},
    {11, Cluster::SR2, "small and large shape: in contact vs apart", 2, 2},
    {12, Cluster::SR1, "two small shapes equally close to a large one vs not", 3, 3},
    {13, Cluster::SD2, "two large/small pairs: one pair a translated copy of the other vs not", 4, 4},
    {14, Cluster::SR2, "three shapes: centres aligned in a row vs not", 3, 3},
    {15, Cluster::SR1, "four shapes on the corners of a square: all identical vs not", 4, 4},
    {16, Cluster::SD2, "two shapes: mirror images about a vertical axis vs different", 2, 2},
    {17, Cluster::SD2, "three identical shapes equally far from the odd one vs not", 4, 4},
    {18, Cluster::SR2, "six shapes: arrangement symmetric about an axis vs not", 6, 6},
    {19, Cluster::SD2, "two shapes: one a scaled copy of the other vs different", 2, 2},
    {20, Cluster::SD2, "two shapes: mirror images across their perpendicular bisector vs not", 2, 2},
    {21, Cluster::SD1, "two shapes: same up to translation, rotation and scale vs different", 2, 2},
    {22, Cluster::SD2, "three aligned shapes: all identical vs not", 3, 3},
    {23, Cluster::SR1, "large shape and two small: both small inside or both outside vs split", 3, 3},
}};

void check_task(int id) {
  if (id < 1 || id > kNumTasks) throw std::out_of_range("task id must be in 1..23, got " + std::to_string(id));
}

double wrap_angle(double a) {
  a = std::fmod(a, kTwoPi);
  return a < 0.0 ? a + kTwoPi : a;
}

Point unit(double angle) { return {std::cos(angle), std::sin(angle)}; }

bool points_in_frame(const Points& p) {
  const double lo = kFrameMargin;
  const double hi = kFrame - 1 - kFrameMargin;
  return (p.array() >= lo).all() && (p.array() <= hi).all();
}

// ---------------------------------------------------------------- verification helpers

std::vector<Points> image_points(std::span<const PlacedShape> shapes) {
  std::vector<Points> out;
  out.reserve(shapes.size());
  for (const auto& s : shapes) out.push_back(s.image_points());
  return out;
}

// Union-find over same_shape; returns the class id of each shape (smallest member index).
std::vector<int> identity_classes(const std::vector<Points>& pts, ShapeGroup group) {
  const int n = static_cast<int>(pts.size());
  std::vector<int> parent(n);
  for (int i = 0; i < n; ++i) parent[i] = i;
  std::function<int(int)> find = [&](int i) { return parent[i] == i ? i : parent[i] = find(parent[i]); };
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (find(i) != find(j) && geom::same_shape(pts[i], pts[j], group)) parent[find(j)] = find(i);
  std::vector<int> cls(n);
  for (int i = 0; i < n; ++i) cls[i] = find(i);
  return cls;
}

std::vector<int> class_sizes(const std::vector<int>& cls) {
  std::vector<int> sizes;
  std::vector<int> seen;
  for (int c : cls) {
    if (std::find(seen.begin(), seen.end(), c) != seen.end()) continue;
    seen.push_back(c);
    sizes.push_back(static_cast<int>(std::count(cls.begin(), cls.end(), c)));
  }
  std::sort(sizes.begin(), sizes.end());
  return sizes;
}

int largest(const std::vector<Points>& pts) {
  int best = 0;
  for (int i = 1; i < static_cast<int>(pts.size()); ++i)
    if (geom::radius(pts[i]) > geom::radius(pts[best])) best = i;
  return best;
}

double line_deviation(const Point& p, const Point& a, const Point& b) {
  const Point d = (b - a).normalized();
  const Point v = p - a;
  return std::abs(d.x() * v.y() - d.y() * v.x());
}

bool is_square(std::array<Point, 4> c, double tol) {
  std::array<double, 6> d{};
  int k = 0;
  for (int i = 0; i < 4; ++i)
    for (int j = i + 1; j < 4; ++j) d[k++] = (c[i] - c[j]).norm();
  std::sort(d.begin(), d.end());
  const double side = (d[0] + d[1] + d[2] + d[3]) / 4.0;
  for (int i = 0; i < 4; ++i)
    if (std::abs(d[i] - side) > tol) return false;
  for (int i = 4; i < 6; ++i)
    if (std::abs(d[i] - side * std::numbers::sqrt2) > tol * std::numbers::sqrt2) return false;
  return true;
}

Points flip_x(const Points& p) {
  Points q = p;
  q.row(0) *= -1.0;
  return q;
}

// ---------------------------------------------------------------- construction helpers

struct Budget {
  int used = 0;
  void spend() {
    if (++used > kMaxAttempts)
      throw SamplingExhausted("scene sampling exceeded " + std::to_string(kMaxAttempts) + " placement attempts");
  }
};

class Builder {
 public:
  Builder(Rng& rng, Budget& budget) : rng_(rng), budget_(budget) {}

  Rng& rng() { return rng_; }
  void spend() { budget_.spend(); }

  Contour contour(double irr_lo = 0.3, double irr_hi = 0.75) {
    const int n_anchor = rng_.integer(6, 11);
    const double irr = rng_.uniform(irr_lo, irr_hi);
    return geom::sample_contour(rng_, n_anchor, irr, next_id_++);
  }

  double angle() { return rng_.uniform(0.0, kTwoPi); }
  double uniform(double lo, double hi) { return rng_.uniform(lo, hi); }

  Point position(double r) {
    const double lo = kFrameMargin + r;
    const double hi = kFrame - 1 - kFrameMargin - r;
    return {rng_.uniform(lo, hi), rng_.uniform(lo, hi)};
  }

  static PlacedShape place(const Contour& c, double scale, const Point& at, double rotation,
                           bool mirror = false) {
    return PlacedShape{c, Transform{at, wrap_angle(rotation), scale, mirror}};
  }

  // Moves `shape` along origin + s * dir, approaching `host` from outside, until the border
  // distance equals `target`. Returns false when the ray never gets that close.
  bool approach_from_outside(const Points& host, PlacedShape& shape, const Point& origin,
                             const Point& dir, double target) {
    spend();
    const Points base = geom::apply_transform(shape.contour, Transform{origin, shape.transform.rotation,
                                                                        shape.transform.scale,
                                                                        shape.transform.mirror});
    double reach = 0.0;
    for (Eigen::Index i = 0; i < host.cols(); ++i) reach = std::max(reach, (host.col(i) - origin).norm());
    auto dist_at = [&](double s) {
      const Points p = base.colwise() + s * dir;
      return geom::border_distance(host, p);
    };
    // Border distance is 1-Lipschitz in s, so a step of (d - target) cannot skip past the
    // target; at least 1 px per step, with bisection resolving any overshoot.
    double s_out = reach + shape.transform.scale + target + 2.0;
    double s_in = -1.0;
    for (double s = s_out;;) {
      const double d = dist_at(s);
      if (d <= target) {
        s_in = s;
        break;
      }
      s_out = s;
      if (s <= 0.0) break;
      s = std::max(0.0, s - std::max(1.0, d - target));
    }
    if (s_in < 0.0) return false;
    for (int it = 0; it < 40; ++it) {
      const double mid = 0.5 * (s_in + s_out);
      (dist_at(mid) <= target ? s_in : s_out) = mid;
    }
    shape.transform.translation = origin + s_out * dir;
    return !geom::contains(host, shape.image_points());
  }

  // Moves `shape` outward from `origin` (inside `host`) until its border distance to the
  // host equals `target`.
  bool approach_from_inside(const Points& host, PlacedShape& shape, const Point& origin,
                            const Point& dir, double target) {
    spend();
    const Points base = geom::apply_transform(shape.contour, Transform{origin, shape.transform.rotation,
                                                                        shape.transform.scale,
                                                                        shape.transform.mirror});
    if (!geom::contains(host, base) || geom::border_distance(host, base) <= target) return false;
    auto dist_at = [&](double s) { return geom::border_distance(host, Points(base.colwise() + s * dir)); };
    double s_in = 0.0;
    double s_out = -1.0;
    for (double s = std::max(1.0, dist_at(0.0) - target); s < kFrame;) {
      const double d = dist_at(s);
      if (d <= target) {
        s_out = s;
        break;
      }
      s_in = s;
      s += std::max(1.0, d - target);
    }
    if (s_out < 0.0) return false;
    for (int it = 0; it < 40; ++it) {
      const double mid = 0.5 * (s_in + s_out);
      (dist_at(mid) <= target ? s_out : s_in) = mid;
    }
    shape.transform.translation = origin + s_in * dir;
    return geom::contains(host, shape.image_points());
  }

 private:
  Rng& rng_;
  Budget& budget_;
  std::uint64_t next_id_ = 0;
};

using Shapes = std::vector<PlacedShape>;
using Built = std::optional<Shapes>;

bool all_in_frame(const Shapes& s) {
  return std::all_of(s.begin(), s.end(), [](const PlacedShape& p) { return points_in_frame(p.image_points()); });
}

// Unrelated contours: well separated and neither inside the other.
bool free_pair(const Points& a, const Points& b, double gap = kSeparation) {
  if (geom::border_distance(a, b) < gap) return false;
  return !geom::point_in_polygon(a.col(0), b) && !geom::point_in_polygon(b.col(0), a);
}

bool all_free(const Shapes& s, const std::vector<std::pair<int, int>>& exempt = {}) {
  const auto pts = image_points(s);
  for (int i = 0; i < static_cast<int>(s.size()); ++i)
    for (int j = i + 1; j < static_cast<int>(s.size()); ++j) {
      if (std::find(exempt.begin(), exempt.end(), std::pair{i, j}) != exempt.end()) continue;
      if (!free_pair(pts[i], pts[j])) return false;
    }
  return true;
}

// Places shapes at random until each is free of the ones before it.
bool scatter(Builder& b, Shapes& shapes, std::size_t from, double gap = kSeparation) {
  for (std::size_t i = from; i < shapes.size(); ++i) {
    bool placed = false;
    for (int tries = 0; tries < 50 && !placed; ++tries) {
      b.spend();
      shapes[i].transform.translation = b.position(shapes[i].transform.scale);
      const Points pi = shapes[i].image_points();
      placed = points_in_frame(pi);
      for (std::size_t j = 0; j < i && placed; ++j) placed = free_pair(pi, shapes[j].image_points(), gap);
    }
    if (!placed) return false;
  }
  return true;
}

// Positions along a line: consecutive shapes separated by a random gap.
std::vector<Point> along_line(Builder& b, const std::vector<double>& radii, double gap_lo, double gap_hi) {
  const Point dir = unit(b.angle());
  std::vector<double> t(radii.size(), 0.0);
  for (std::size_t i = 1; i < radii.size(); ++i) t[i] = t[i - 1] + radii[i - 1] + radii[i] + b.uniform(gap_lo, gap_hi);
  const double span = t.back();
  const Point centre = b.position(0.5 * span + radii.front());
  std::vector<Point> out;
  for (double ti : t) out.push_back(centre + (ti - 0.5 * span) * dir);
  return out;
}

PlacedShape mirrored_about_vertical(const PlacedShape& a, double axis_x) {
  PlacedShape m = a;
  m.transform.translation.x() = 2.0 * axis_x - a.transform.translation.x();
  m.transform.rotation = wrap_angle(-a.transform.rotation);
  m.transform.mirror = !a.transform.mirror;
  return m;
}

// ---------------------------------------------------------------- per-task builders

Built task1(Builder& b, int label) {
  const double s = b.uniform(12, 20);
  const Contour a = b.contour();
  const Contour other = label ? a : b.contour();
  const double rot = b.angle();
  Shapes sh{Builder::place(a, s, {}, rot), Builder::place(other, s, {}, label ? rot : b.angle())};
  if (!scatter(b, sh, 0)) return {};
  return sh;
}

Built task2(Builder& b, int label) {
  PlacedShape host = Builder::place(b.contour(0.1, 0.3), b.uniform(44, 54), {63.5, 63.5}, b.angle());
  host.transform.translation = b.position(host.transform.scale);
  PlacedShape small = Builder::place(b.contour(), b.uniform(7, 10), {}, b.angle());
  const Points hp = host.image_points();
  if (!points_in_frame(hp)) return {};
  const Point c = geom::centroid(hp);
  if (label == 1) {
    if (!b.approach_from_inside(hp, small, c, unit(b.angle()), b.uniform(kNearLo + 0.5, kNearHi - 0.5)))
      return {};
  } else {
    bool ok = false;
    for (int tries = 0; tries < 20 && !ok; ++tries) {
      b.spend();
      small.transform.translation = c + b.uniform(0, 10) * unit(b.angle());
      const Points sp = small.image_points();
      ok = geom::contains(hp, sp) && geom::border_distance(hp, sp) >= kFarMin;
    }
    if (!ok) return {};
  }
  return Shapes{host, small};
}

Built task3(Builder& b, int label) {
  const double s = b.uniform(10, 15);
  Shapes sh;
  for (int i = 0; i < 4; ++i) sh.push_back(Builder::place(b.contour(), s * b.uniform(0.9, 1.1), {}, b.angle()));
  auto touch = [&](int host, int mover) {
    const Points hp = sh[host].image_points();
    return b.approach_from_outside(hp, sh[mover], geom::centroid(hp), unit(b.angle()), b.uniform(0.25, 1.25));
  };
  sh[0].transform.translation = b.position(3.5 * s);
  if (!touch(0, 1)) return {};
  std::vector<std::pair<int, int>> contacts{{0, 1}};
  if (label == 1) {
    if (!touch(b.rng().coin() ? 0 : 1, 2)) return {};
    contacts.insert(contacts.end(), {{0, 2}, {1, 2}});
    if (!scatter(b, sh, 3, kGroupGap)) return {};
  } else {
    Shapes pair{sh[2], sh[3]};
    bool ok = false;
    for (int tries = 0; tries < 30 && !ok; ++tries) {
      b.spend();
      pair[0].transform.translation = b.position(s);
      const Points hp = pair[0].image_points();
      if (!b.approach_from_outside(hp, pair[1], geom::centroid(hp), unit(b.angle()), b.uniform(0.25, 1.25)))
        continue;
      const Points p0 = pair[0].image_points();
      const Points p1 = pair[1].image_points();
      ok = points_in_frame(p0) && points_in_frame(p1);
      for (int j = 0; j < 2 && ok; ++j)
        ok = free_pair(p0, sh[j].image_points(), kGroupGap) && free_pair(p1, sh[j].image_points(), kGroupGap);
    }
    if (!ok) return {};
    sh[2] = pair[0];
    sh[3] = pair[1];
    contacts.push_back({2, 3});
  }
  // Every pair is either in contact or clearly apart.
  const auto pts = image_points(sh);
  for (int i = 0; i < 4; ++i)
    for (int j = i + 1; j < 4; ++j) {
      const double d = geom::border_distance(pts[i], pts[j]);
      if (d > kContact && d < kGroupGap) return {};
      if (d <= kContact && std::find(contacts.begin(), contacts.end(), std::pair{i, j}) == contacts.end()) return {};
    }
  return sh;
}

Built task4(Builder& b, int label) {
  PlacedShape host = Builder::place(b.contour(0.1, 0.35), b.uniform(28, 38), {}, b.angle());
  host.transform.translation = b.position(host.transform.scale);
  PlacedShape small = Builder::place(b.contour(), b.uniform(8, 12), {}, b.angle());
  const Points hp = host.image_points();
  bool ok = false;
  for (int tries = 0; tries < 30 && !ok; ++tries) {
    b.spend();
    if (label == 1) {
      small.transform.translation = geom::centroid(hp) + b.uniform(0, 0.5) * host.transform.scale * unit(b.angle());
      const Points sp = small.image_points();
      ok = geom::contains(hp, sp) && geom::border_distance(hp, sp) >= kSeparation;
    } else {
      small.transform.translation = b.position(small.transform.scale);
      const Points sp = small.image_points();
      ok = free_pair(hp, sp);
    }
  }
  if (!ok) return {};
  return Shapes{host, small};
}

Built task5(Builder& b, int label) {
  const double s1 = b.uniform(11, 17);
  const double s2 = b.uniform(11, 17);
  const Contour a = b.contour();
  const Contour c = b.contour();
  const double ra = b.angle();
  const double rc = b.angle();
  Shapes sh{Builder::place(a, s1, {}, ra), Builder::place(label ? a : b.contour(), s1, {}, label ? ra : b.angle()),
            Builder::place(c, s2, {}, rc), Builder::place(label ? c : b.contour(), s2, {}, label ? rc : b.angle())};
  if (!scatter(b, sh, 0)) return {};
  return sh;
}

Built task6(Builder& b, int label) {
  const double s1 = b.uniform(10, 14);
  const double s2 = b.uniform(10, 14);
  const Contour a = b.contour();
  const Contour c = b.contour();
  const double ra = b.angle();
  const double rc = b.angle();
  const double d1 = b.uniform(32, 52);
  double d2 = d1 + (b.rng().coin() ? 1 : -1) * (label ? b.uniform(0, 1.0) : b.uniform(8, 16));
  if (d2 < 2 * std::max(s1, s2) + kSeparation) return {};
  Shapes sh{Builder::place(a, s1, {}, ra), Builder::place(a, s1, {}, ra), Builder::place(c, s2, {}, rc),
            Builder::place(c, s2, {}, rc)};
  const Point u1 = unit(b.angle());
  const Point u2 = unit(b.angle());
  for (int tries = 0; tries < 40; ++tries) {
    b.spend();
    sh[0].transform.translation = b.position(s1);
    sh[1].transform.translation = sh[0].transform.translation + d1 * u1;
    sh[2].transform.translation = b.position(s2);
    sh[3].transform.translation = sh[2].transform.translation + d2 * u2;
    if (all_in_frame(sh) && all_free(sh)) return sh;
  }
  return {};
}

Built task7(Builder& b, int label) {
  const double s = b.uniform(9, 12);
  std::vector<Contour> cs;
  std::vector<double> rots;
  const int classes = label ? 3 : 2;
  for (int i = 0; i < classes; ++i) {
    cs.push_back(b.contour());
    rots.push_back(b.angle());
  }
  Shapes sh;
  for (int i = 0; i < 6; ++i) {
    const int k = label ? i / 2 : i / 3;
    sh.push_back(Builder::place(cs[k], s, {}, rots[k]));
  }
  if (!scatter(b, sh, 0)) return {};
  return sh;
}

Built task8(Builder& b, int label) {
  const double s = b.uniform(14, 20);
  PlacedShape a = Builder::place(b.contour(), s, {}, b.angle());
  const double axis = b.uniform(44, 84);
  const double half = b.uniform(s + 3, 40);
  a.transform.translation = {axis - half, b.uniform(s + 2, kFrame - 3 - s)};
  PlacedShape m = mirrored_about_vertical(a, axis);
  if (label == 0) m.transform.translation.y() += (b.rng().coin() ? 1 : -1) * b.uniform(6, 14);
  Shapes sh{a, m};
  if (!all_in_frame(sh) || !all_free(sh)) return {};
  return sh;
}

Built task9(Builder& b, int label) {
  const double big = b.uniform(18, 24);
  const double sm1 = b.uniform(7, 9);
  const double sm2 = b.uniform(7, 9);
  std::vector<double> radii;
  Shapes sh;
  // Order along the line: small, large, small vs large, small, small.
  if (label == 1) {
    radii = {sm1, big, sm2};
    sh = {Builder::place(b.contour(), sm1, {}, b.angle()), Builder::place(b.contour(), big, {}, b.angle()),
          Builder::place(b.contour(), sm2, {}, b.angle())};
  } else {
    radii = {big, sm1, sm2};
    sh = {Builder::place(b.contour(), big, {}, b.angle()), Builder::place(b.contour(), sm1, {}, b.angle()),
          Builder::place(b.contour(), sm2, {}, b.angle())};
  }
  const auto pos = along_line(b, radii, 6, 16);
  for (int i = 0; i < 3; ++i) sh[i].transform.translation = pos[i];
  if (!all_in_frame(sh) || !all_free(sh)) return {};
  return sh;
}

Built task10(Builder& b, int label) {
  const double s = b.uniform(9, 13);
  const double side = b.uniform(42, 64);
  const double rot = b.angle();
  const Point centre = b.position(side * std::numbers::sqrt2 / 2 + s);
  Shapes sh;
  for (int k = 0; k < 4; ++k) {
    const Point corner = centre + side * std::numbers::sqrt2 / 2 * unit(rot + kPi / 4 + k * kPi / 2);
    sh.push_back(Builder::place(b.contour(), s, corner, b.angle()));
  }
  if (label == 0) sh[b.rng().index(4)].transform.translation += b.uniform(8, 15) * unit(b.angle());
  if (!all_in_frame(sh) || !all_free(sh)) return {};
  return sh;
}

Built task11(Builder& b, int label) {
  PlacedShape host = Builder::place(b.contour(), b.uniform(18, 26), {}, b.angle());
  host.transform.translation = b.position(host.transform.scale + 12);
  PlacedShape small = Builder::place(b.contour(), b.uniform(8, 12), {}, b.angle());
  const Points hp = host.image_points();
  const double target = label ? b.uniform(0.25, 1.25) : b.uniform(6, 14);
  if (!b.approach_from_outside(hp, small, geom::centroid(hp), unit(b.angle()), target)) return {};
  return Shapes{host, small};
}

Built task12(Builder& b, int label) {
  PlacedShape host = Builder::place(b.contour(0.1, 0.4), b.uniform(20, 26), {}, b.angle());
  host.transform.translation = b.position(host.transform.scale + 14);
  const Points hp = host.image_points();
  const Point c = geom::centroid(hp);
  const double d1 = b.uniform(5, 20);
  const double d2 = label ? std::max(4.6, d1 + b.uniform(-1.0, 1.0)) : d1 + (b.rng().coin() ? 1 : -1) * b.uniform(8, 14);
  if (d2 < kSeparation) return {};
  PlacedShape s1 = Builder::place(b.contour(), b.uniform(7, 10), {}, b.angle());
  PlacedShape s2 = Builder::place(b.contour(), b.uniform(7, 10), {}, b.angle());
  const double a1 = b.angle();
  if (!b.approach_from_outside(hp, s1, c, unit(a1), d1)) return {};
  if (!b.approach_from_outside(hp, s2, c, unit(a1 + b.uniform(kPi / 2, 3 * kPi / 2)), d2)) return {};
  Shapes sh{host, s1, s2};
  if (!all_in_frame(sh) || !free_pair(s1.image_points(), s2.image_points())) return {};
  return sh;
}

Built task13(Builder& b, int label) {
  const double big = b.uniform(13, 17);
  const double sm = b.uniform(7, 9);
  const Contour ca = b.contour();
  const Contour cb = b.contour();
  const double ra = b.angle();
  const double rb = b.angle();
  const double len = big + sm + b.uniform(8, 16);
  const double ang = b.angle();
  const Point v = len * unit(ang);
  Point v2 = v;
  if (label == 0) {
    // Rotate the offset so that |v2 - v| lands in [8, 20].
    const double gap = b.uniform(8, 20);
    const double phi = 2.0 * std::asin(std::min(1.0, gap / (2.0 * len)));
    v2 = len * unit(ang + (b.rng().coin() ? phi : -phi));
  }
  Shapes sh{Builder::place(ca, big, {}, ra), Builder::place(cb, sm, {}, rb), Builder::place(ca, big, {}, ra),
            Builder::place(cb, sm, {}, rb)};
  for (int tries = 0; tries < 40; ++tries) {
    b.spend();
    sh[0].transform.translation = b.position(big);
    sh[1].transform.translation = sh[0].transform.translation + v;
    sh[2].transform.translation = b.position(big);
    sh[3].transform.translation = sh[2].transform.translation + v2;
    if (all_in_frame(sh) && all_free(sh)) return sh;
  }
  return {};
}

Built task14(Builder& b, int label) {
  const double s = b.uniform(10, 14);
  std::vector<double> radii{s, s, s};
  Shapes sh;
  for (int i = 0; i < 3; ++i) sh.push_back(Builder::place(b.contour(), s * b.uniform(0.9, 1.1), {}, b.angle()));
  const auto pos = along_line(b, radii, 8, 18);
  const Point dir = (pos[2] - pos[0]).normalized();
  const Point normal(-dir.y(), dir.x());
  const double off = label ? b.uniform(-0.8, 0.8) : (b.rng().coin() ? 1 : -1) * b.uniform(8, 16);
  for (int i = 0; i < 3; ++i) sh[i].transform.translation = pos[i];
  sh[1].transform.translation += off * normal;
  if (!all_in_frame(sh) || !all_free(sh)) return {};
  return sh;
}

Built task15(Builder& b, int label) {
  const double s = b.uniform(10, 14);
  const double side = b.uniform(44, 62);
  const double rot = b.angle();
  const Contour a = b.contour();
  const double ra = b.angle();
  const Point centre = b.position(side * std::numbers::sqrt2 / 2 + s);
  Shapes sh;
  for (int k = 0; k < 4; ++k)
    sh.push_back(Builder::place(a, s, centre + side * std::numbers::sqrt2 / 2 * unit(rot + kPi / 4 + k * kPi / 2), ra));
  if (label == 0) sh[b.rng().index(4)].contour = b.contour();
  if (!all_in_frame(sh) || !all_free(sh)) return {};
  return sh;
}

Built task16(Builder& b, int label) {
  const double s = b.uniform(14, 20);
  const double axis = (kFrame - 1) / 2.0;
  PlacedShape a = Builder::place(b.contour(), s, {}, b.angle());
  a.transform.translation = {axis - b.uniform(s + 3, 44), b.uniform(s + 2, kFrame - 3 - s)};
  PlacedShape m = mirrored_about_vertical(a, axis);
  if (label == 0) m.contour = b.contour();
  Shapes sh{a, m};
  if (!all_in_frame(sh) || !all_free(sh)) return {};
  return sh;
}

Built task17(Builder& b, int label) {
  const double s = b.uniform(9, 12);
  const Contour a = b.contour();
  const double ra = b.angle();
  PlacedShape odd = Builder::place(b.contour(), s, {}, b.angle());
  const double d = b.uniform(30, 42);
  std::array<double, 3> dist{d, d, d};
  if (label == 1) {
    for (auto& x : dist) x += b.uniform(-0.5, 0.5);
  } else {
    dist[0] = d - b.uniform(4, 8);
    dist[2] = d + b.uniform(4, 8);
    dist[1] = b.uniform(dist[0], dist[2]);
  }
  const double base = b.angle();
  const std::array<double, 3> angles{base, base + b.uniform(1.6, 2.6), base + b.uniform(3.7, 4.7)};
  odd.transform.translation = b.position(d + 8 + s);
  Shapes sh{odd};
  for (int k = 0; k < 3; ++k)
    sh.push_back(Builder::place(a, s, odd.transform.translation + dist[k] * unit(angles[k]), ra));
  if (!all_in_frame(sh) || !all_free(sh)) return {};
  return sh;
}

Built task18(Builder& b, int label) {
  const double s = b.uniform(8, 11);
  const double axis = b.uniform(56, 72);
  Shapes sh;
  for (int i = 0; i < 3; ++i) sh.push_back(Builder::place(b.contour(), s, {}, b.angle()));
  for (int tries = 0; tries < 40; ++tries) {
    b.spend();
    for (int i = 0; i < 3; ++i)
      sh[i].transform.translation = {b.uniform(kFrameMargin + s, axis - s - 3), b.uniform(kFrameMargin + s, kFrame - 3 - s)};
    Shapes all = sh;
    for (int i = 0; i < 3; ++i) all.push_back(mirrored_about_vertical(sh[i], axis));
    if (label == 0) all[3 + b.rng().index(3)].transform.translation += b.uniform(6, 12) * unit(b.angle());
    if (all_in_frame(all) && all_free(all)) return all;
  }
  return {};
}

Built task19(Builder& b, int label) {
  double s1 = b.uniform(9, 13);
  double s2 = s1 * b.uniform(1.4, 2.0);
  if (b.rng().coin()) std::swap(s1, s2);
  const Contour a = b.contour();
  const double rot = b.angle();
  Shapes sh{Builder::place(a, s1, {}, rot), Builder::place(label ? a : b.contour(), s2, {}, label ? rot : b.angle())};
  if (!scatter(b, sh, 0)) return {};
  return sh;
}

Built task20(Builder& b, int label) {
  const double s = b.uniform(12, 18);
  const Point ca = b.position(s);
  const Point cb = b.position(s);
  if ((cb - ca).norm() < 2 * s + kSeparation + 2) return {};
  const Point d = cb - ca;
  const double alpha = std::atan2(d.y(), d.x()) + kPi / 2;  // bisector direction
  const double theta = b.angle();
  PlacedShape a = Builder::place(b.contour(), s, ca, theta);
  PlacedShape m = Builder::place(label ? a.contour : b.contour(), s, cb, 2 * alpha + kPi - theta, true);
  Shapes sh{a, m};
  if (!all_in_frame(sh) || !all_free(sh)) return {};
  return sh;
}

Built task21(Builder& b, int label) {
  double s1 = b.uniform(10, 14);
  double s2 = s1 * b.uniform(1.3, 1.8);
  if (b.rng().coin()) std::swap(s1, s2);
  const Contour a = b.contour();
  Shapes sh{Builder::place(a, s1, {}, b.angle()), Builder::place(label ? a : b.contour(), s2, {}, b.angle())};
  if (!scatter(b, sh, 0)) return {};
  return sh;
}

Built task22(Builder& b, int label) {
  const double s = b.uniform(10, 14);
  const Contour a = b.contour();
  const double rot = b.angle();
  Shapes sh{Builder::place(a, s, {}, rot), Builder::place(a, s, {}, rot), Builder::place(a, s, {}, rot)};
  if (label == 0) sh[b.rng().index(3)].contour = b.contour();
  const auto pos = along_line(b, {s, s, s}, 6, 16);
  for (int i = 0; i < 3; ++i) sh[i].transform.translation = pos[i];
  if (!all_in_frame(sh) || !all_free(sh)) return {};
  return sh;
}

Built task23(Builder& b, int label) {
  PlacedShape host = Builder::place(b.contour(0.1, 0.3), b.uniform(32, 40), {}, b.angle());
  host.transform.translation = b.position(host.transform.scale);
  const Points hp = host.image_points();
  bool in1 = b.rng().coin();
  bool in2 = label ? in1 : !in1;
  Shapes sh{host, Builder::place(b.contour(), b.uniform(7, 10), {}, b.angle()),
            Builder::place(b.contour(), b.uniform(7, 10), {}, b.angle())};
  const std::array<bool, 2> inside{in1, in2};
  for (int k = 0; k < 2; ++k) {
    bool ok = false;
    for (int tries = 0; tries < 40 && !ok; ++tries) {
      b.spend();
      PlacedShape& s = sh[1 + k];
      s.transform.translation = inside[k] ? Point(geom::centroid(hp) + b.uniform(0, 0.6) * host.transform.scale * unit(b.angle()))
                                          : b.position(s.transform.scale);
      const Points sp = s.image_points();
      ok = points_in_frame(sp) &&
           (inside[k] ? geom::contains(hp, sp) && geom::border_distance(hp, sp) >= kSeparation : free_pair(hp, sp));
      if (ok && k == 1) ok = free_pair(sp, sh[1].image_points());
    }
    if (!ok) return {};
  }
  return sh;
}

using BuildFn = Built (*)(Builder&, int);
constexpr std::array<BuildFn, kNumTasks> kBuilders{task1,  task2,  task3,  task4,  task5,  task6,  task7,  task8,
                                                   task9,  task10, task11, task12, task13, task14, task15, task16,
                                                   task17, task18, task19, task20, task21, task22, task23};

}  // namespace

std::string_view cluster_name(Cluster c) {
  switch (c) {
    case Cluster::SD1: return "SD1";
    case Cluster::SD2: return "SD2";
    case Cluster::SR1: return "SR1";
    case Cluster::SR2: return "SR2";
  }
  return "?";
}

const TaskSpec& task_spec(int id) {
  check_task(id);
  return kSpecs[id - 1];
}

std::span<const TaskSpec> all_tasks() { return kSpecs; }

ClassMargin class_margin(int task_id) {
  check_task(task_id);
  ClassMargin m;
  m.separation_px = kSeparation;
  switch (task_id) {
    case 1: case 5: case 7: case 15: case 22:
      m.same_shape_tol = geom::kDefaultSameShapeTol;
      m.group = ShapeGroup::translation();
      break;
    case 2:
      m.near_band_px = {kNearLo, kNearHi};
      m.far_min_px = kFarMin;
      m.size_ratio = kSizeRatio;
      break;
    case 3:
      m.contact_px = kContact;
      m.separation_px = kGroupGap;
      break;
    case 11:
      m.contact_px = kContact;
      break;
    case 4: case 23:
      m.size_ratio = kSizeRatio;
      break;
    case 6: case 17:
      m.equidistance_px = kEqualTol;
      m.same_shape_tol = geom::kDefaultSameShapeTol;
      m.group = ShapeGroup::translation();
      break;
    case 8: case 18:
      m.symmetry_px = kEqualTol;
      break;
    case 9:
      m.size_ratio = kSizeRatio;
      break;
    case 10:
      m.square_px = kEqualTol;
      break;
    case 12:
      m.equidistance_px = kEqualTol;
      m.size_ratio = kSizeRatio;
      break;
    case 13:
      m.offset_px = kEqualTol;
      m.same_shape_tol = geom::kDefaultSameShapeTol;
      m.group = ShapeGroup::translation();
      break;
    case 14:
      m.collinear_px = kEqualTol;
      break;
    case 16:
      m.same_shape_tol = geom::kDefaultSameShapeTol;
      m.group = ShapeGroup::translation();  // applied after a horizontal flip
      break;
    case 19:
      m.same_shape_tol = geom::kDefaultSameShapeTol;
      m.group = ShapeGroup{false, true, false};
      break;
    case 20:
      m.same_shape_tol = geom::kDefaultSameShapeTol;
      m.group = ShapeGroup::translation();  // applied after reflection across the bisector
      break;
    case 21:
      m.same_shape_tol = geom::kDefaultSameShapeTol;
      m.group = ShapeGroup::similarity();
      break;
    default:
      break;
  }
  return m;
}

int verify(int task_id, std::span<const PlacedShape> shapes) {
  const TaskSpec& spec = task_spec(task_id);
  const int n = static_cast<int>(shapes.size());
  if (n < spec.min_shapes || n > spec.max_shapes)
    throw RuleUndefined("task " + std::to_string(task_id) + " expects " + std::to_string(spec.min_shapes) +
                        " shapes, got " + std::to_string(n));
  const auto p = image_points(shapes);
  const auto T = ShapeGroup::translation();

  switch (task_id) {
    case 1:
      return geom::same_shape(p[0], p[1], T);
    case 2: {
      const int L = largest(p);
      const int S = 1 - L;
      return geom::contains(p[L], p[S]) && geom::border_distance(p[L], p[S]) <= kNearHi;
    }
    case 3: {
      std::vector<int> comp{0, 1, 2, 3};
      std::function<int(int)> find = [&](int i) { return comp[i] == i ? i : comp[i] = find(comp[i]); };
      for (int i = 0; i < 4; ++i)
        for (int j = i + 1; j < 4; ++j)
          if (geom::border_distance(p[i], p[j]) <= kContact) comp[find(j)] = find(i);
      std::vector<int> roots(4);
      for (int i = 0; i < 4; ++i) roots[i] = find(i);
      return class_sizes(roots) == std::vector<int>{1, 3};
    }
    case 4: {
      const int L = largest(p);
      return geom::contains(p[L], p[1 - L]);
    }
    case 5:
      return class_sizes(identity_classes(p, T)) == std::vector<int>{2, 2};
    case 6: {
      const auto cls = identity_classes(p, T);
      if (class_sizes(cls) != std::vector<int>{2, 2}) return 0;
      std::vector<double> d;
      for (int i = 0; i < 4; ++i)
        for (int j = i + 1; j < 4; ++j)
          if (cls[i] == cls[j]) d.push_back((geom::centroid(p[i]) - geom::centroid(p[j])).norm());
      return std::abs(d[0] - d[1]) <= kEqualTol;
    }
    case 7:
      return class_sizes(identity_classes(p, T)) == std::vector<int>{2, 2, 2};
    case 8:
    case 18:
      return geom::symmetric_arrangement(std::span<const Points>(p), kEqualTol);
    case 9: {
      const int L = largest(p);
      std::array<int, 2> s{};
      for (int i = 0, k = 0; i < 3; ++i)
        if (i != L) s[k++] = i;
      const Point a = geom::centroid(p[s[0]]);
      const Point b = geom::centroid(p[s[1]]);
      const double t = (geom::centroid(p[L]) - a).dot(b - a) / (b - a).squaredNorm();
      return t > 0.0 && t < 1.0;
    }
    case 10:
      return is_square({geom::centroid(p[0]), geom::centroid(p[1]), geom::centroid(p[2]), geom::centroid(p[3])},
                       kEqualTol);
    case 11:
      return geom::border_distance(p[0], p[1]) <= kContact;
    case 12: {
      const int L = largest(p);
      std::vector<double> d;
      for (int i = 0; i < 3; ++i)
        if (i != L) d.push_back(geom::border_distance(p[L], p[i]));
      return std::abs(d[0] - d[1]) <= kEqualTol;
    }
    case 13: {
      const auto cls = identity_classes(p, T);
      if (class_sizes(cls) != std::vector<int>{2, 2}) return 0;
      std::vector<int> first;
      std::vector<int> second;
      for (int i = 0; i < 4; ++i) (cls[i] == cls[0] ? first : second).push_back(i);
      auto big = first;
      auto small = second;
      if (geom::radius(p[small[0]]) > geom::radius(p[big[0]])) std::swap(big, small);
      const Point t = geom::centroid(p[big[1]]) - geom::centroid(p[big[0]]);
      const Point b0 = geom::centroid(p[small[0]]);
      const Point b1 = geom::centroid(p[small[1]]);
      return (b0 + t - b1).norm() <= kEqualTol || (b1 + t - b0).norm() <= kEqualTol;
    }
    case 14: {
      std::array<Point, 3> c{geom::centroid(p[0]), geom::centroid(p[1]), geom::centroid(p[2])};
      int bi = 0;
      int bj = 1;
      for (int i = 0; i < 3; ++i)
        for (int j = i + 1; j < 3; ++j)
          if ((c[i] - c[j]).norm() > (c[bi] - c[bj]).norm()) {
            bi = i;
            bj = j;
          }
      const int k = 3 - bi - bj;
      return line_deviation(c[k], c[bi], c[bj]) <= kEqualTol;
    }
    case 15:
    case 22:
      return class_sizes(identity_classes(p, T)) == std::vector<int>{n};
    case 16:
      return geom::same_shape(flip_x(p[0]), p[1], T);
    case 17: {
      const auto cls = identity_classes(p, T);
      if (class_sizes(cls) != std::vector<int>{1, 3}) return 0;
      int odd = 0;
      for (int i = 0; i < 4; ++i)
        if (std::count(cls.begin(), cls.end(), cls[i]) == 1) odd = i;
      double lo = 1e300;
      double hi = -1e300;
      for (int i = 0; i < 4; ++i) {
        if (i == odd) continue;
        const double d = (geom::centroid(p[i]) - geom::centroid(p[odd])).norm();
        lo = std::min(lo, d);
        hi = std::max(hi, d);
      }
      return hi - lo <= kEqualTol;
    }
    case 19:
      return geom::same_shape(p[0], p[1], ShapeGroup{false, true, false});
    case 20: {
      const Point ca = geom::centroid(p[0]);
      const Point cb = geom::centroid(p[1]);
      const Point d = cb - ca;
      if (d.norm() == 0.0) return 0;
      const Points r = geom::reflect(p[0], 0.5 * (ca + cb), Point(-d.y(), d.x()));
      return geom::same_shape(r, p[1], T);
    }
    case 21:
      return geom::same_shape(p[0], p[1], ShapeGroup::similarity());
    case 23: {
      const int L = largest(p);
      std::vector<bool> in;
      for (int i = 0; i < 3; ++i)
        if (i != L) in.push_back(geom::contains(p[L], p[i]));
      return in[0] == in[1];
    }
    default:
      break;
  }
  throw RuleUndefined("unknown task " + std::to_string(task_id));
}

Scene sample_scene(int task_id, int label, std::uint64_t seed) {
  check_task(task_id);
  if (label != 0 && label != 1) throw std::invalid_argument("label must be 0 or 1");
  Rng rng(child_seed(child_seed(seed, static_cast<std::uint64_t>(task_id)), static_cast<std::uint64_t>(label)));
  Budget budget;
  Builder builder(rng, budget);
  for (;;) {
    budget.spend();
    Built shapes = kBuilders[task_id - 1](builder, label);
    if (!shapes || !all_in_frame(*shapes)) continue;
    if (verify(task_id, *shapes) != label) continue;
    return Scene{task_id, label, std::move(*shapes), kFrame};
  }
}

Scene translated(const Scene& s, const Point& offset) {
  Scene out = s;
  for (auto& sh : out.shapes) sh.transform.translation += offset;
  return out;
}

bool within_frame(const Scene& s) {
  return std::all_of(s.shapes.begin(), s.shapes.end(),
                     [](const PlacedShape& p) { return points_in_frame(p.image_points()); });
}

std::vector<std::uint8_t> scene_bytes(const Scene& s) {
  std::vector<std::uint8_t> out;
  auto put = [&out](const auto& v) {
    std::uint8_t buf[sizeof(v)];
    std::memcpy(buf, &v, sizeof(v));
    out.insert(out.end(), buf, buf + sizeof(v));
  };
  put(static_cast<std::int32_t>(s.task_id));
  put(static_cast<std::int32_t>(s.label));
  put(static_cast<std::int32_t>(s.frame));
  put(static_cast<std::uint32_t>(s.shapes.size()));
  for (const auto& sh : s.shapes) {
    put(sh.contour.id);
    put(static_cast<std::uint32_t>(sh.contour.points.cols()));
    for (Eigen::Index i = 0; i < sh.contour.points.size(); ++i) put(sh.contour.points.data()[i]);
    put(sh.transform.translation.x());
    put(sh.transform.translation.y());
    put(sh.transform.rotation);
    put(sh.transform.scale);
    put(static_cast<std::uint8_t>(sh.transform.mirror));
  }
  return out;
}

}  // namespace svrt::tasks
