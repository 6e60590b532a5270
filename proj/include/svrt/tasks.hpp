#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "svrt/geometry.hpp"

namespace svrt::tasks {

inline constexpr int kNumTasks = 23;
inline constexpr int kFrame = 128;
/// Minimum distance, in pixels, between any contour point and the image border.
inline constexpr double kFrameMargin = 2.0;

enum class Cluster { SD1, SD2, SR1, SR2 };

std::string_view cluster_name(Cluster c);
/// Same-different tasks (SD1/SD2) versus spatial-relation tasks (SR1/SR2).
inline bool is_same_different(Cluster c) { return c == Cluster::SD1 || c == Cluster::SD2; }

struct TaskSpec {
  int id;
  Cluster cluster;
  std::string_view rule_description;
  int min_shapes;
  int max_shapes;
};

/// Throws std::out_of_range for ids outside 1..23.
const TaskSpec& task_spec(int id);
std::span<const TaskSpec> all_tasks();

struct Scene {
  int task_id = 0;
  int label = 0;
  std::vector<geom::PlacedShape> shapes;
  int frame = kFrame;
};

/// Numeric thresholds a task's rule depends on. Unused entries are empty.
struct ClassMargin {
  std::optional<double> contact_px;                       // contact iff border distance <= this
  std::optional<double> separation_px;                    // unrelated contours are at least this far apart
  std::optional<std::pair<double, double>> near_band_px;  // (lo, hi]
  std::optional<double> far_min_px;
  std::optional<double> equidistance_px;
  std::optional<double> collinear_px;
  std::optional<double> symmetry_px;
  std::optional<double> square_px;
  std::optional<double> offset_px;
  std::optional<double> size_ratio;  // "large" is at least this many times "small"
  std::optional<double> same_shape_tol;
  std::optional<geom::ShapeGroup> group;
};

ClassMargin class_margin(int task_id);

/// Builds a scene of the requested class and checks it with verify(). Deterministic in
/// (task_id, label, seed). Throws SamplingExhausted after 10,000 placement attempts.
Scene sample_scene(int task_id, int label, std::uint64_t seed);

/// Evaluates the task rule on image-space geometry only. Throws RuleUndefined when the
/// shape count is outside the task's range.
int verify(int task_id, std::span<const geom::PlacedShape> shapes);
inline int verify(const Scene& s) { return verify(s.task_id, s.shapes); }

/// Rigidly translates every shape in the scene.
Scene translated(const Scene& s, const geom::Point& offset);

/// True when every contour point lies inside the frame with the required margin.
bool within_frame(const Scene& s);

/// Flat little-endian encoding of every field; equal scenes give equal bytes.
std::vector<std::uint8_t> scene_bytes(const Scene& s);

}  // namespace svrt::tasks
