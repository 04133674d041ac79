#include "s2opt/render.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>

#include "s2opt/error.hpp"
#include "s2opt/mapfile.hpp"

namespace s2opt {

namespace {

using Rgb = std::array<unsigned char, 3>;

// Piecewise-linear perceptual ramp, dark blue through yellow.
Rgb colour(double t) {
  static constexpr std::array<std::array<double, 3>, 5> stops{{
      {0.267, 0.005, 0.329},
      {0.231, 0.322, 0.545},
      {0.129, 0.569, 0.549},
      {0.369, 0.788, 0.384},
      {0.993, 0.906, 0.145},
  }};
  t = std::clamp(t, 0.0, 1.0) * (stops.size() - 1);
  const auto i = std::min(static_cast<std::size_t>(t), stops.size() - 2);
  const double f = t - static_cast<double>(i);
  Rgb c;
  for (int k = 0; k < 3; ++k)
    c[k] = static_cast<unsigned char>(std::lround(255.0 * ((1.0 - f) * stops[i][k] + f * stops[i + 1][k])));
  return c;
}

}  // namespace

Raster mollweide_raster(const SphMap& map, int width, RenderView view) {
  require(width >= 2 && width % 2 == 0, ErrorCode::invalid_parameter, "image width must be even and >= 2");
  const auto& g = *map.grid;
  Raster r{width, width / 2, RVec(static_cast<std::size_t>(width) * (width / 2),
                                   std::numeric_limits<double>::quiet_NaN())};
  const double sq2 = std::numbers::sqrt2;
  for (int i = 0; i < r.height; ++i) {
    const double y = sq2 * (1.0 - 2.0 * (i + 0.5) / r.height);
    const double aux = std::asin(std::clamp(y / sq2, -1.0, 1.0));
    const double lat = std::asin(std::clamp((2.0 * aux + std::sin(2.0 * aux)) / std::numbers::pi, -1.0, 1.0));
    for (int j = 0; j < r.width; ++j) {
      const double x = 2.0 * sq2 * (2.0 * (j + 0.5) / r.width - 1.0);
      if ((x * x) / 8.0 + (y * y) / 2.0 > 1.0) continue;
      const double lon = std::numbers::pi * x / (2.0 * sq2 * std::cos(aux));
      const double phi = lon < 0.0 ? lon + 2.0 * std::numbers::pi : lon;
      const Complex v = map.values[g.nearest_pixel(0.5 * std::numbers::pi - lat, phi)];
      r.values[static_cast<std::size_t>(i) * r.width + j] = view == RenderView::real ? v.real() : std::abs(v);
    }
  }
  return r;
}

Raster render_mollweide(const SphMap& map, const std::string& ppm_path, const RenderOptions& o) {
  Raster r = mollweide_raster(map, o.width, o.view);
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (double v : r.values) {
    if (!std::isfinite(v)) continue;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  lo = o.vmin.value_or(lo);
  hi = o.vmax.value_or(hi);
  const double span = hi > lo ? hi - lo : 1.0;

  // Outside the ellipse is white; NaN samples inside are grey.
  std::vector<unsigned char> px(r.values.size() * 3, 255);
  const double sq2 = std::numbers::sqrt2;
  for (int i = 0; i < r.height; ++i) {
    const double y = sq2 * (1.0 - 2.0 * (i + 0.5) / r.height);
    for (int j = 0; j < r.width; ++j) {
      const double x = 2.0 * sq2 * (2.0 * (j + 0.5) / r.width - 1.0);
      if ((x * x) / 8.0 + (y * y) / 2.0 > 1.0) continue;
      const std::size_t k = static_cast<std::size_t>(i) * r.width + j;
      const Rgb c = std::isfinite(r.values[k]) ? colour((r.values[k] - lo) / span) : Rgb{128, 128, 128};
      std::copy(c.begin(), c.end(), px.begin() + static_cast<std::ptrdiff_t>(3 * k));
    }
  }
  std::ofstream out(ppm_path, std::ios::binary);
  require(static_cast<bool>(out), ErrorCode::config_error, "cannot open " + ppm_path + " for writing");
  out << "P6\n" << r.width << ' ' << r.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(px.data()), static_cast<std::streamsize>(px.size()));
  return r;
}

void write_raster(const std::string& path, const Raster& r) {
  MapFile m;
  m.kind = MapKind::pixel;
  m.n_theta = static_cast<std::uint32_t>(r.height);
  m.n_phi = static_cast<std::uint32_t>(r.width);
  m.dtype = MapDtype::f64;
  m.values.assign(r.values.begin(), r.values.end());
  write_map_file(path, m);
}

}  // namespace s2opt
