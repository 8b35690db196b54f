#include "reach/geodesy.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "reach/error.hpp"

namespace reach {

namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;
constexpr double kRadToDeg = 180.0 / std::numbers::pi;

void check_zoom(std::uint32_t q) {
  if (q < 1 || q > kMaxZoom) {
    throw ParameterError("zoom must be in [1, 30], got " + std::to_string(q));
  }
}

}  // namespace

LatLon LatLon::make(double lat, double lon) {
  if (!std::isfinite(lat) || !std::isfinite(lon)) {
    throw InvalidCoordinate("non-finite coordinate");
  }
  if (lat < -90.0 || lat > 90.0) {
    throw InvalidCoordinate("latitude out of range: " + std::to_string(lat));
  }
  if (lon >= -180.0 && lon < 180.0) return LatLon{lat, lon};
  double l = std::fmod(lon + 180.0, 360.0);
  if (l < 0) l += 360.0;
  return LatLon{lat, l - 180.0};
}

bool TileCoord::valid() const {
  if (q < 1 || q > kMaxZoom) return false;
  const auto n = tiles_per_axis(q);
  return x < n && y < n;
}

GridPoint project_to_grid(const LatLon& p, std::uint32_t q) {
  check_zoom(q);
  if (!std::isfinite(p.lat) || !std::isfinite(p.lon)) {
    throw InvalidCoordinate("non-finite coordinate");
  }
  const double lat = std::clamp(p.lat, -kMaxMercatorLat, kMaxMercatorLat);
  const double n = static_cast<double>(tiles_per_axis(q));
  const double lat_rad = lat * kDegToRad;
  return GridPoint{(p.lon + 180.0) / 360.0 * n,
                   (1.0 - std::log(std::tan(lat_rad) + 1.0 / std::cos(lat_rad)) / std::numbers::pi) / 2.0 * n};
}

TileCoord latlon_to_tile(const LatLon& p, std::uint32_t q) {
  const auto g = project_to_grid(p, q);
  const double n = static_cast<double>(tiles_per_axis(q));
  const double fx = std::floor(g.x);
  const double fy = std::floor(g.y);

  const double hi = n - 1.0;
  return TileCoord{q, static_cast<std::uint32_t>(std::clamp(fx, 0.0, hi)),
                   static_cast<std::uint32_t>(std::clamp(fy, 0.0, hi))};
}

LatLon tile_centroid(const TileCoord& s) {
  const double n = static_cast<double>(tiles_per_axis(s.q));
  const double lon = (s.x + 0.5) / n * 360.0 - 180.0;
  const double lat = std::atan(std::sinh(std::numbers::pi * (1.0 - 2.0 * (s.y + 0.5) / n))) * kRadToDeg;
  return LatLon{lat, lon};
}

double haversine_m(const LatLon& a, const LatLon& b) {
  const double phi1 = a.lat * kDegToRad;
  const double phi2 = b.lat * kDegToRad;
  const double dphi = (b.lat - a.lat) * kDegToRad;
  const double dlambda = (b.lon - a.lon) * kDegToRad;
  const double s1 = std::sin(dphi / 2.0);
  const double s2 = std::sin(dlambda / 2.0);
  const double h = std::min(1.0, s1 * s1 + std::cos(phi1) * std::cos(phi2) * s2 * s2);
  return 2.0 * kEarthRadiusM * std::asin(std::sqrt(h));
}

double initial_bearing_deg(const LatLon& a, const LatLon& b) {
  const double phi1 = a.lat * kDegToRad;
  const double phi2 = b.lat * kDegToRad;
  const double dlambda = (b.lon - a.lon) * kDegToRad;
  const double y = std::sin(dlambda) * std::cos(phi2);
  const double x = std::cos(phi1) * std::sin(phi2) - std::sin(phi1) * std::cos(phi2) * std::cos(dlambda);
  double deg = std::atan2(y, x) * kRadToDeg;
  deg = std::fmod(deg + 360.0, 360.0);
  // fmod can return exactly 360 for tiny negative inputs
  return deg >= 360.0 ? 0.0 : deg;
}

TileOffset tile_offset(const TileCoord& s, const TileCoord& s2) {
  if (s.q != s2.q) {
    throw ParameterError("zoom mismatch: " + std::to_string(s.q) + " vs " + std::to_string(s2.q));
  }
  return TileOffset{static_cast<std::int64_t>(s2.x) - static_cast<std::int64_t>(s.x),
                    static_cast<std::int64_t>(s2.y) - static_cast<std::int64_t>(s.y)};
}

bool in_neighborhood(const TileCoord& s, const TileCoord& s2, std::uint32_t delta_r) {
  const auto off = tile_offset(s, s2);
  const std::int64_t d = delta_r;
  return off.dx <= d && off.dx >= -d && off.dy <= d && off.dy >= -d;
}

double equator_tile_edge_m(std::uint32_t q) {
  return 2.0 * std::numbers::pi * kEarthRadiusM / static_cast<double>(tiles_per_axis(q));
}

}  // namespace reach
