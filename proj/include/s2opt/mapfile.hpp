#pragma once

// S2MAP binary map files.
//
// Layout: magic "S2MAP1\n", then little-endian u32 kind (0 pixel map,
// 1 harmonic), i32 spin, u32 L, u32 n_theta, u32 n_phi (0 for harmonic),
// u8 dtype (0 f64, 1 complex128 as interleaved f64 pairs), u64 payload
// count (number of values), payload row-major.

#include <cstdint>
#include <string>

#include "s2opt/grid.hpp"

namespace s2opt {

enum class MapKind : std::uint32_t { pixel = 0, harmonic = 1 };
enum class MapDtype : std::uint8_t { f64 = 0, complex128 = 1 };

struct MapFile {
  MapKind kind = MapKind::pixel;
  std::int32_t spin = 0;
  std::uint32_t L = 0;
  std::uint32_t n_theta = 0;
  std::uint32_t n_phi = 0;
  MapDtype dtype = MapDtype::complex128;
  CVec values;  // f64 payloads load with zero imaginary part
};

/// Throws config-error if the file cannot be opened, invalid-parameter if
/// an f64 file is asked to hold values with nonzero imaginary part.
void write_map_file(const std::string& path, const MapFile& m);
/// Throws format-error on bad magic, unknown kind or dtype, inconsistent
/// shape, or truncation.
MapFile read_map_file(const std::string& path);

void write_map(const std::string& path, const SphMap& map, MapDtype dtype = MapDtype::complex128);
void write_map(const std::string& path, const HarmonicCoeffs& coeffs, MapDtype dtype = MapDtype::complex128);

/// Pixel map on a fresh grid of the stored bandlimit; format-error if the
/// stored shape is not that grid.
SphMap to_sph_map(const MapFile& m);
HarmonicCoeffs to_harmonic(const MapFile& m);

}  // namespace s2opt
