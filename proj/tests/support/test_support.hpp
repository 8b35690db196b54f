#pragma once

#include <algorithm>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "reach/geodesy.hpp"
#include "reach/trajectory.hpp"

namespace reach::testing {

inline Trajectory trajectory_from_tiles(std::string id, const std::vector<TileCoord>& tiles, std::int64_t t0 = 1000,
                                        std::int64_t step = 10) {
  Trajectory tr;
  tr.id = std::move(id);
  std::int64_t t = t0;
  for (const auto& s : tiles) {
    tr.records.push_back(TrajectoryRecord{s, t, tile_centroid(s)});
    t += step;
  }
  return tr;
}

inline TrajectorySet set_of(std::vector<Trajectory> trajs, std::uint32_t q = 24) {
  TrajectorySet set;
  set.zoom = q;
  set.trajectories = std::move(trajs);
  set.t0 = 0;
  set.dt = 1'000'000;
  return set;
}

/// Small dense-ish random sets: M movers with 1..n_max records each, tiles
/// wandering inside a `span` x `span` block so neighborhoods overlap.
inline TrajectorySet random_small_set(std::mt19937_64& rng, std::size_t m_max = 50, std::size_t n_max = 20,
                                      std::uint32_t span = 10) {
  std::uniform_int_distribution<std::size_t> m_dist(1, m_max), n_dist(1, n_max);
  std::uniform_int_distribution<int> step(-2, 2), dt(1, 40);
  std::uniform_int_distribution<std::uint32_t> start(0, span - 1);
  const std::uint32_t x0 = 13813500, y0 = 6357300;
  std::vector<Trajectory> out;
  const auto m = m_dist(rng);
  for (std::size_t i = 0; i < m; ++i) {
    Trajectory tr;
    tr.id = "m" + std::to_string(i);
    std::int64_t x = start(rng), y = start(rng), t = 1000 + dt(rng);
    const auto n = n_dist(rng);
    for (std::size_t k = 0; k < n; ++k) {
      const TileCoord s{24, x0 + static_cast<std::uint32_t>(x), y0 + static_cast<std::uint32_t>(y)};
      tr.records.push_back(TrajectoryRecord{s, t, tile_centroid(s)});
      x = std::clamp<std::int64_t>(x + step(rng), 0, span - 1);
      y = std::clamp<std::int64_t>(y + step(rng), 0, span - 1);
      t += dt(rng);
    }
    out.push_back(std::move(tr));
  }
  return set_of(std::move(out));
}

struct TempDir {
  std::filesystem::path path;
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path = std::filesystem::temp_directory_path() / ("reach_" + tag + "_" + std::to_string(rd()));
    std::filesystem::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

}  // namespace reach::testing
