#pragma once

/// \file usfwi/render.hpp
/// \brief Heatmap PNGs with a vertical colorbar.
///
/// Depth (last grid axis) runs down the image, lateral position across.
/// Output bytes depend only on the map, range and palette.

#include "usfwi/grid.hpp"

#include <png.h>

#include <algorithm>
#include <array>
#include <cstdio>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace usfwi {

enum class Palette { Gray, Viridis };

inline Palette palette_from_string(const std::string& s) {
  if (s == "gray") return Palette::Gray;
  if (s == "viridis") return Palette::Viridis;
  throw Error("unknown palette '" + s + "' (gray, viridis)");
}

using Rgb = std::array<unsigned char, 3>;

/// t in [0, 1].
inline Rgb palette_color(Palette p, double t) {
  t = std::clamp(t, 0.0, 1.0);
  if (p == Palette::Gray) {
    const auto v = static_cast<unsigned char>(std::lround(255.0 * t));
    return {v, v, v};
  }
  // Piecewise-linear viridis through 9 anchors.
  static constexpr double kV[9][3] = {{68, 1, 84},    {71, 44, 122},  {59, 81, 139},  {44, 113, 142}, {33, 144, 141},
                                      {39, 173, 129}, {92, 200, 99},  {170, 220, 50}, {253, 231, 37}};
  const double x = t * 8.0;
  const int i = std::min(7, static_cast<int>(x));
  const double f = x - i;
  Rgb c;
  for (int q = 0; q < 3; ++q) c[q] = static_cast<unsigned char>(std::lround(kV[i][q] + f * (kV[i + 1][q] - kV[i][q])));
  return c;
}

struct RenderOptions {
  Palette palette = Palette::Viridis;
  std::optional<double> vmin, vmax;  ///< defaults to the map's range
  int scale = 4;                     ///< pixels per cell
  int bar_width = 16;
  int gap = 8;
};

/// RGB raster, row-major, 3 bytes per pixel.
struct Image {
  int width = 0, height = 0;
  std::vector<unsigned char> rgb;

  Rgb pixel(int x, int y) const {
    const auto o = 3 * (static_cast<std::size_t>(y) * static_cast<std::size_t>(width) + static_cast<std::size_t>(x));
    return {rgb[o], rgb[o + 1], rgb[o + 2]};
  }
};

/// Extracts the (axis 0, last axis) plane at index `slice` along axis 1.
inline std::pair<Grid<2>, RVector> slice_xz(const Grid<3>& g, const RVector& v, std::ptrdiff_t slice) {
  if (v.size() != g.size()) throw Error("map does not match its grid");
  if (slice < 0 || slice >= g.extent(1))
    throw Error("slice index " + std::to_string(slice) + " out of range [0, " + std::to_string(g.extent(1)) + ")");
  const Grid<2> g2({g.extent(0), g.extent(2)}, g.spacing(), {g.origin()[0], g.origin()[2]});
  RVector out(g2.size());
  for (std::ptrdiff_t i = 0; i < g.extent(0); ++i)
    for (std::ptrdiff_t k = 0; k < g.extent(2); ++k) out[g2.linear({i, k})] = v[g.linear({i, slice, k})];
  return {g2, out};
}

inline Image rasterize(const Grid<2>& g, const RVector& v, const RenderOptions& o = {}) {
  if (v.size() != g.size()) throw Error("map does not match its grid");
  if (o.scale < 1 || o.bar_width < 1 || o.gap < 0) throw Error("invalid render layout");
  double lo = o.vmin.value_or(v.minCoeff()), hi = o.vmax.value_or(v.maxCoeff());
  if (!(hi > lo)) hi = lo + 1.0;  // constant map: lowest palette color
  const int nx = static_cast<int>(g.extent(0)), nz = static_cast<int>(g.extent(1));
  Image im;
  im.width = nx * o.scale + o.gap + o.bar_width;
  im.height = nz * o.scale;
  im.rgb.assign(3 * static_cast<std::size_t>(im.width) * static_cast<std::size_t>(im.height), 255);
  auto put = [&](int x, int y, Rgb c) {
    const auto off = 3 * (static_cast<std::size_t>(y) * static_cast<std::size_t>(im.width) + static_cast<std::size_t>(x));
    std::copy(c.begin(), c.end(), im.rgb.begin() + static_cast<std::ptrdiff_t>(off));
  };
  for (int i = 0; i < nx; ++i)
    for (int k = 0; k < nz; ++k) {
      const Rgb c = palette_color(o.palette, (v[g.linear({i, k})] - lo) / (hi - lo));
      for (int a = 0; a < o.scale; ++a)
        for (int b = 0; b < o.scale; ++b) put(i * o.scale + a, k * o.scale + b, c);
    }
  // Colorbar: top is vmax.
  for (int y = 0; y < im.height; ++y) {
    const Rgb c = palette_color(o.palette, im.height == 1 ? 1.0 : 1.0 - static_cast<double>(y) / (im.height - 1));
    for (int x = 0; x < o.bar_width; ++x) put(nx * o.scale + o.gap + x, y, c);
  }
  return im;
}

inline void write_png(const std::filesystem::path& path, const Image& im) {
  FILE* fp = std::fopen(path.string().c_str(), "wb");
  if (!fp) throw Error("cannot open " + path.string() + " for writing");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    std::fclose(fp);
    throw Error("libpng initialisation failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    std::fclose(fp);
    throw Error("libpng failed writing " + path.string());
  }
  png_init_io(png, fp);
  png_set_IHDR(png, info, static_cast<png_uint_32>(im.width), static_cast<png_uint_32>(im.height), 8, PNG_COLOR_TYPE_RGB,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (int y = 0; y < im.height; ++y)
    png_write_row(png, im.rgb.data() + 3 * static_cast<std::size_t>(y) * static_cast<std::size_t>(im.width));
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  if (std::fclose(fp) != 0) throw Error("write failed: " + path.string());
}

}  // namespace usfwi
