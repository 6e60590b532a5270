#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include <Eigen/Core>

#include "svrt/tasks.hpp"

namespace svrt::io {

inline constexpr std::uint8_t kInk = 0;
inline constexpr std::uint8_t kBackground = 255;

/// 8-bit grayscale, row-major. 0 is ink, 255 is background.
struct Image {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;

  Image() = default;
  Image(int w, int h, std::uint8_t fill = kBackground)
      : width(w), height(h), pixels(static_cast<std::size_t>(w) * h, fill) {}

  std::uint8_t at(int row, int col) const { return pixels[static_cast<std::size_t>(row) * width + col]; }
  std::uint8_t& at(int row, int col) { return pixels[static_cast<std::size_t>(row) * width + col]; }

  friend bool operator==(const Image&, const Image&) = default;
};

using FloatMap = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Draws every contour as a closed 1-px 8-connected stroke (Bresenham between consecutive
/// vertices rounded to pixel centres). Scene coordinates are scaled by size / scene.frame.
Image rasterize(const tasks::Scene& scene, int size = tasks::kFrame);

/// Draws one closed polyline onto `img` (coordinates already in image pixels).
void draw_polyline(Image& img, const geom::Points& pts);

/// Resamples to target x target and maps pixels to x / 255 - 0.5. Upscaling is
/// nearest-neighbour; downscaling keeps the darkest pixel of each block so 1-px strokes
/// survive. Both factors must be integers.
FloatMap prepare(const Image& img, int target = 256);

/// Writes an 8-bit grayscale PNG.
void write_png(const std::filesystem::path& path, const Image& img);

}  // namespace svrt::io
