#pragma once

// Mollweide rendering of sphere maps to binary PPM.

#include <optional>
#include <string>

#include "s2opt/grid.hpp"

namespace s2opt {

enum class RenderView { real, magnitude };

struct RenderOptions {
  int width = 800;  // height is width / 2
  std::optional<double> vmin, vmax;  // default: finite data range
  RenderView view = RenderView::real;
};

/// Raster of sampled values, row-major top to bottom; NaN outside the ellipse.
struct Raster {
  int width = 0;
  int height = 0;
  RVec values;
};

/// Equal-area projection centred on phi = 0 with north up. Each image pixel
/// takes the value of the nearest sample.
Raster mollweide_raster(const SphMap& map, int width, RenderView view = RenderView::real);

/// Writes a P6 image; pixels outside the ellipse are white and NaN samples
/// grey. Returns the raster.
Raster render_mollweide(const SphMap& map, const std::string& ppm_path, const RenderOptions& o = {});

/// Stores a raster as a pixel S2MAP with L = 0.
void write_raster(const std::string& path, const Raster& r);

}  // namespace s2opt
