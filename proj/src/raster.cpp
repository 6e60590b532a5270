#include "svrt/raster.hpp"

#include <cmath>
#include <cstdio>
#include <memory>
#include <stdexcept>

#include <png.h>

#include "svrt/common.hpp"

namespace svrt::io {

namespace {

void plot(Image& img, int x, int y) {
  if (x >= 0 && y >= 0 && x < img.width && y < img.height) img.at(y, x) = kInk;
}

void bresenham(Image& img, int x0, int y0, int x1, int y1) {
  const int dx = std::abs(x1 - x0);
  const int sx = x0 < x1 ? 1 : -1;
  const int dy = -std::abs(y1 - y0);
  const int sy = y0 < y1 ? 1 : -1;
  int err = dx + dy;
  for (;;) {
    plot(img, x0, y0);
    if (x0 == x1 && y0 == y1) break;
    const int e2 = 2 * err;
    if (e2 >= dy) {
      err += dy;
      x0 += sx;
    }
    if (e2 <= dx) {
      err += dx;
      y0 += sy;
    }
  }
}

}  // namespace

void draw_polyline(Image& img, const geom::Points& pts) {
  const Eigen::Index n = pts.cols();
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& a = pts.col(i);
    const auto& b = pts.col((i + 1) % n);
    bresenham(img, static_cast<int>(std::lround(a.x())), static_cast<int>(std::lround(a.y())),
              static_cast<int>(std::lround(b.x())), static_cast<int>(std::lround(b.y())));
  }
}

Image rasterize(const tasks::Scene& scene, int size) {
  Image img(size, size);
  const double k = static_cast<double>(size) / scene.frame;
  for (const auto& shape : scene.shapes) {
    geom::Points pts = shape.image_points();
    if (k != 1.0) pts = ((pts.array() + 0.5) * k - 0.5).matrix();
    draw_polyline(img, pts);
  }
  return img;
}

FloatMap prepare(const Image& img, int target) {
  if (img.width != img.height) throw std::invalid_argument("prepare: image must be square");
  FloatMap out(target, target);
  if (target >= img.width) {
    if (target % img.width != 0) throw std::invalid_argument("prepare: target must be a multiple of the width");
    const int f = target / img.width;
    for (int r = 0; r < target; ++r)
      for (int c = 0; c < target; ++c) out(r, c) = static_cast<float>(img.at(r / f, c / f)) / 255.0f - 0.5f;
  } else {
    if (img.width % target != 0) throw std::invalid_argument("prepare: width must be a multiple of the target");
    const int f = img.width / target;
    for (int r = 0; r < target; ++r)
      for (int c = 0; c < target; ++c) {
        std::uint8_t m = kBackground;
        for (int i = 0; i < f; ++i)
          for (int j = 0; j < f; ++j) m = std::min(m, img.at(r * f + i, c * f + j));
        out(r, c) = static_cast<float>(m) / 255.0f - 0.5f;
      }
  }
  return out;
}

void write_png(const std::filesystem::path& path, const Image& img) {
  std::unique_ptr<FILE, int (*)(FILE*)> fp(std::fopen(path.string().c_str(), "wb"), &std::fclose);
  if (!fp) throw Error("cannot open " + path.string() + " for writing");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    throw Error("libpng initialisation failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw Error("libpng failed writing " + path.string());
  }
  png_init_io(png, fp.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(img.width), static_cast<png_uint_32>(img.height), 8,
               PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (int r = 0; r < img.height; ++r)
    png_write_row(png, const_cast<png_bytep>(img.pixels.data() + static_cast<std::size_t>(r) * img.width));
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

}  // namespace svrt::io
