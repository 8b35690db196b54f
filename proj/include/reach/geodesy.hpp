#pragma once

#include <compare>
#include <cstdint>
#include <functional>

namespace reach {

inline constexpr double kEarthRadiusM = 6371000.0;
inline constexpr double kMaxMercatorLat = 85.05112878;
inline constexpr std::uint32_t kMaxZoom = 30;

/// A geographic position in degrees. Construct through LatLon::make to get
/// validation and longitude normalization into [-180, 180).
struct LatLon {
  double lat = 0.0;
  double lon = 0.0;

  static LatLon make(double lat, double lon);

  friend bool operator==(const LatLon&, const LatLon&) = default;
};

/// A zoom-q cell of the spherical Mercator grid. x grows eastward, y grows
/// southward, origin at the north-west corner.
struct TileCoord {
  std::uint32_t q = 0;
  std::uint32_t x = 0;
  std::uint32_t y = 0;

  friend bool operator==(const TileCoord&, const TileCoord&) = default;

  /// Canonical order: zoom, then row (y), then column (x).
  friend std::strong_ordering operator<=>(const TileCoord& a, const TileCoord& b) {
    if (auto c = a.q <=> b.q; c != 0) return c;
    if (auto c = a.y <=> b.y; c != 0) return c;
    return a.x <=> b.x;
  }

  bool valid() const;
};

struct TileOffset {
  std::int64_t dx = 0;
  std::int64_t dy = 0;
  friend bool operator==(const TileOffset&, const TileOffset&) = default;
};

/// Number of tiles along one axis at zoom q.
inline std::uint64_t tiles_per_axis(std::uint32_t q) { return std::uint64_t{1} << q; }

TileCoord latlon_to_tile(const LatLon& p, std::uint32_t q);

/// Continuous grid position of p at zoom q: the integer parts are the tile
/// coordinates returned by latlon_to_tile (before clamping).
struct GridPoint {
  double x = 0.0;
  double y = 0.0;
};
GridPoint project_to_grid(const LatLon& p, std::uint32_t q);

/// Inverse projection of the tile's center point (x + 0.5, y + 0.5).
LatLon tile_centroid(const TileCoord& s);

/// Great-circle distance on a sphere of radius kEarthRadiusM.
double haversine_m(const LatLon& a, const LatLon& b);

/// Initial great-circle bearing from a to b; 0 = north, clockwise, [0, 360).
double initial_bearing_deg(const LatLon& a, const LatLon& b);

/// (x2 - x, y2 - y). Throws ParameterError when zooms differ.
TileOffset tile_offset(const TileCoord& s, const TileCoord& s2);

/// Chebyshev-distance test: max(|dx|, |dy|) <= delta_r.
bool in_neighborhood(const TileCoord& s, const TileCoord& s2, std::uint32_t delta_r);

/// Length of one tile edge at the equator.
double equator_tile_edge_m(std::uint32_t q);

struct TileHash {
  std::size_t operator()(const TileCoord& t) const noexcept {
    std::uint64_t k = (std::uint64_t{t.y} << 32) ^ t.x ^ (std::uint64_t{t.q} << 58);
    k ^= k >> 33;
    k *= 0xff51afd7ed558ccdULL;
    k ^= k >> 33;
    return static_cast<std::size_t>(k);
  }
};

}  // namespace reach
