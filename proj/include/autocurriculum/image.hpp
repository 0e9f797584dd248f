#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

namespace autocurriculum {

struct Rgb {
  std::uint8_t r = 0, g = 0, b = 0;
  bool operator==(const Rgb&) const = default;
};

/// Minimal RGB raster used for scene and learning-curve plots.
class Canvas {
 public:
  Canvas(int width, int height, Rgb background);

  int width() const { return width_; }
  int height() const { return height_; }

  void set(int x, int y, Rgb c);
  Rgb get(int x, int y) const;
  void fill_rect(int x0, int y0, int x1, int y1, Rgb c);
  void line(int x0, int y0, int x1, int y1, Rgb c);

  std::vector<std::uint8_t> encode_png() const;

 private:
  int width_;
  int height_;
  std::vector<Rgb> pixels_;
};

/// Fixed geometry of curve plots; the y axis always spans [0, y_max].
struct PlotLayout {
  int width = 320;
  int height = 200;
  int left = 36;
  int right = 8;
  int top = 10;
  int bottom = 24;

  int y_pixel(double value, double y_max) const;
  int x_pixel(double value, double x_max) const;
};

inline constexpr Rgb kPlotCurveColor{30, 90, 200};

/// Line plot of (x, y) points with y clamped to [0, y_max]. x is scaled to
/// the largest x value; an empty series gives the bare axes.
Canvas plot_series(const std::vector<double>& xs, const std::vector<double>& ys, double y_max,
                   const PlotLayout& layout = {});

}  // namespace autocurriculum
