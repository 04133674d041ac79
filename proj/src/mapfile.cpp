#include "s2opt/mapfile.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <vector>

#include "s2opt/error.hpp"

namespace s2opt {

namespace {

constexpr char kMagic[] = "S2MAP1\n";
constexpr std::size_t kMagicLen = 7;

static_assert(std::endian::native == std::endian::little, "map files are written from little-endian hosts only");

template <class T>
void put(std::vector<char>& buf, T v) {
  const auto* p = reinterpret_cast<const char*>(&v);
  buf.insert(buf.end(), p, p + sizeof(T));
}

struct Reader {
  const std::vector<char>& buf;
  std::size_t pos = 0;

  template <class T>
  T get() {
    require(pos + sizeof(T) <= buf.size(), ErrorCode::format_error, "map file truncated in header");
    T v;
    std::memcpy(&v, buf.data() + pos, sizeof(T));
    pos += sizeof(T);
    return v;
  }
};

std::size_t expected_count(const MapFile& m) {
  if (m.kind == MapKind::harmonic) return HarmonicCoeffs::size_for(static_cast<int>(m.L));
  return static_cast<std::size_t>(m.n_theta) * m.n_phi;
}

}  // namespace

void write_map_file(const std::string& path, const MapFile& m) {
  require(m.values.size() == expected_count(m), ErrorCode::dimension_error, "value count differs from map shape");
  std::vector<char> buf(kMagic, kMagic + kMagicLen);
  put(buf, static_cast<std::uint32_t>(m.kind));
  put(buf, m.spin);
  put(buf, m.L);
  put(buf, m.n_theta);
  put(buf, m.n_phi);
  put(buf, static_cast<std::uint8_t>(m.dtype));
  put(buf, static_cast<std::uint64_t>(m.values.size()));
  for (const auto& v : m.values) {
    if (m.dtype == MapDtype::f64) {
      require(v.imag() == 0.0, ErrorCode::invalid_parameter, "f64 map file cannot hold complex values");
      put(buf, v.real());
    } else {
      put(buf, v.real());
      put(buf, v.imag());
    }
  }
  std::ofstream out(path, std::ios::binary);
  require(static_cast<bool>(out), ErrorCode::config_error, "cannot open " + path + " for writing");
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  require(static_cast<bool>(out), ErrorCode::config_error, "write to " + path + " failed");
}

MapFile read_map_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorCode::config_error, "cannot open " + path);
  const std::vector<char> buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  require(buf.size() >= kMagicLen && std::memcmp(buf.data(), kMagic, kMagicLen) == 0, ErrorCode::format_error,
          path + " is not an S2MAP1 file");
  Reader r{buf, kMagicLen};
  MapFile m;
  const auto kind = r.get<std::uint32_t>();
  require(kind <= 1, ErrorCode::format_error, "unknown map kind");
  m.kind = static_cast<MapKind>(kind);
  m.spin = r.get<std::int32_t>();
  m.L = r.get<std::uint32_t>();
  m.n_theta = r.get<std::uint32_t>();
  m.n_phi = r.get<std::uint32_t>();
  const auto dtype = r.get<std::uint8_t>();
  require(dtype <= 1, ErrorCode::format_error, "unknown map dtype");
  m.dtype = static_cast<MapDtype>(dtype);
  const auto count = r.get<std::uint64_t>();
  require(m.kind == MapKind::pixel || m.n_phi == 0, ErrorCode::format_error, "harmonic map with pixel dimensions");
  require(count == expected_count(m), ErrorCode::format_error, "payload count differs from map shape");
  const std::size_t per = m.dtype == MapDtype::f64 ? 1 : 2;
  require(buf.size() - r.pos == count * per * sizeof(double), ErrorCode::format_error,
          "payload length differs from count");
  m.values.resize(count);
  for (auto& v : m.values) {
    const double re = r.get<double>();
    const double im = per == 2 ? r.get<double>() : 0.0;
    v = Complex(re, im);
  }
  return m;
}

void write_map(const std::string& path, const SphMap& map, MapDtype dtype) {
  const auto& g = *map.grid;
  write_map_file(path, {MapKind::pixel, map.spin, static_cast<std::uint32_t>(g.L()),
                        static_cast<std::uint32_t>(g.n_theta()), static_cast<std::uint32_t>(g.n_phi()), dtype,
                        map.values});
}

void write_map(const std::string& path, const HarmonicCoeffs& coeffs, MapDtype dtype) {
  write_map_file(path, {MapKind::harmonic, coeffs.spin, static_cast<std::uint32_t>(coeffs.L), 0, 0, dtype,
                        coeffs.coeffs});
}

SphMap to_sph_map(const MapFile& m) {
  require(m.kind == MapKind::pixel, ErrorCode::format_error, "file holds harmonic coefficients, not a map");
  require(m.L >= 1, ErrorCode::format_error, "pixel file without a bandlimit is a raster, not a sphere map");
  auto g = make_grid(static_cast<int>(m.L));
  require(static_cast<int>(m.n_theta) == g->n_theta() && static_cast<int>(m.n_phi) == g->n_phi(),
          ErrorCode::format_error, "pixel dimensions differ from the sampling at this bandlimit");
  return SphMap(g, m.spin, m.values);
}

HarmonicCoeffs to_harmonic(const MapFile& m) {
  require(m.kind == MapKind::harmonic, ErrorCode::format_error, "file holds a pixel map, not coefficients");
  return HarmonicCoeffs(static_cast<int>(m.L), m.spin, m.values);
}

}  // namespace s2opt
