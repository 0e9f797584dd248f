#include "autocurriculum/image.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <stdexcept>

namespace autocurriculum {

Canvas::Canvas(int width, int height, Rgb background)
    : width_(width), height_(height),
      pixels_(static_cast<std::size_t>(width) * height, background) {}

void Canvas::set(int x, int y, Rgb c) {
  if (x < 0 || y < 0 || x >= width_ || y >= height_) return;
  pixels_[static_cast<std::size_t>(y) * width_ + x] = c;
}

Rgb Canvas::get(int x, int y) const {
  return pixels_.at(static_cast<std::size_t>(y) * width_ + x);
}

void Canvas::fill_rect(int x0, int y0, int x1, int y1, Rgb c) {
  if (x0 > x1) std::swap(x0, x1);
  if (y0 > y1) std::swap(y0, y1);
  for (int y = std::max(0, y0); y <= std::min(height_ - 1, y1); ++y)
    for (int x = std::max(0, x0); x <= std::min(width_ - 1, x1); ++x) set(x, y, c);
}

void Canvas::line(int x0, int y0, int x1, int y1, Rgb c) {
  int dx = std::abs(x1 - x0), sx = x0 < x1 ? 1 : -1;
  int dy = -std::abs(y1 - y0), sy = y0 < y1 ? 1 : -1;
  int err = dx + dy;
  while (true) {
    set(x0, y0, c);
    if (x0 == x1 && y0 == y1) break;
    int e2 = 2 * err;
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

namespace {

void append_bytes(png_structp png, png_bytep data, png_size_t length) {
  auto* out = static_cast<std::vector<std::uint8_t>*>(png_get_io_ptr(png));
  out->insert(out->end(), data, data + length);
}

void flush_noop(png_structp) {}

}  // namespace

std::vector<std::uint8_t> Canvas::encode_png() const {
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw std::runtime_error("png_create_write_struct failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    throw std::runtime_error("png_create_info_struct failed");
  }
  std::vector<std::uint8_t> out;
  std::vector<png_bytep> rows(height_);
  std::vector<std::uint8_t> raw(static_cast<std::size_t>(width_) * height_ * 3);
  for (int y = 0; y < height_; ++y) {
    for (int x = 0; x < width_; ++x) {
      const Rgb& p = pixels_[static_cast<std::size_t>(y) * width_ + x];
      std::size_t o = (static_cast<std::size_t>(y) * width_ + x) * 3;
      raw[o] = p.r;
      raw[o + 1] = p.g;
      raw[o + 2] = p.b;
    }
    rows[y] = raw.data() + static_cast<std::size_t>(y) * width_ * 3;
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw std::runtime_error("png encoding failed");
  }
  png_set_write_fn(png, &out, append_bytes, flush_noop);
  png_set_IHDR(png, info, width_, height_, 8, PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  return out;
}

}  // namespace autocurriculum

namespace autocurriculum {

int PlotLayout::y_pixel(double value, double y_max) const {
  const int span = height - top - bottom;
  const double v = std::clamp(value, 0.0, y_max);
  return top + static_cast<int>(std::lround((1.0 - v / y_max) * span));
}

int PlotLayout::x_pixel(double value, double x_max) const {
  const int span = width - left - right;
  if (x_max <= 0) return left;
  return left + static_cast<int>(std::lround(std::clamp(value / x_max, 0.0, 1.0) * span));
}

Canvas plot_series(const std::vector<double>& xs, const std::vector<double>& ys, double y_max,
                   const PlotLayout& layout) {
  if (xs.size() != ys.size()) throw std::invalid_argument("plot_series: xs and ys differ in size");
  if (!(y_max > 0)) throw std::invalid_argument("plot_series: y_max must be positive");
  Canvas canvas(layout.width, layout.height, Rgb{255, 255, 255});
  const Rgb grid{220, 220, 220};
  const Rgb axis{40, 40, 40};
  const int x0 = layout.left;
  const int x1 = layout.width - layout.right;
  for (int k = 0; k <= 4; ++k) {
    int y = layout.y_pixel(y_max * k / 4.0, y_max);
    canvas.line(x0, y, x1, y, k == 0 ? axis : grid);
    canvas.line(x0 - 4, y, x0, y, axis);
  }
  canvas.line(x0, layout.y_pixel(0, y_max), x0, layout.y_pixel(y_max, y_max), axis);

  double x_max = 0;
  for (double x : xs) x_max = std::max(x_max, x);
  for (std::size_t i = 0; i < xs.size(); ++i) {
    int px = layout.x_pixel(xs[i], x_max);
    int py = layout.y_pixel(ys[i], y_max);
    if (i > 0)
      canvas.line(layout.x_pixel(xs[i - 1], x_max), layout.y_pixel(ys[i - 1], y_max), px, py,
                  kPlotCurveColor);
    canvas.fill_rect(px - 1, py, px + 1, py, kPlotCurveColor);
  }
  return canvas;
}

}  // namespace autocurriculum
