#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "reach/geodesy.hpp"

namespace reach {

struct RawRecord {
  std::string mover_id;
  std::int64_t t = 0;  // epoch seconds
  LatLon pos;
};

struct TrajectoryRecord {
  TileCoord tile;
  std::int64_t t = 0;
  LatLon pos;  // original fix; tile == latlon_to_tile(pos, tile.q)

  friend bool operator==(const TrajectoryRecord&, const TrajectoryRecord&) = default;
};

/// One mover's records, strictly increasing in time, all at one zoom.
struct Trajectory {
  std::string id;
  std::vector<TrajectoryRecord> records;
  /// Cumulative centroid-to-centroid path length; empty when not computed.
  std::vector<double> cumulative_m;

  std::size_t size() const { return records.size(); }
  bool empty() const { return records.empty(); }

  friend bool operator==(const Trajectory&, const Trajectory&) = default;
};

/// Trajectories observed in [t0, t0 + dt] at zoom `zoom`.
struct TrajectorySet {
  std::vector<Trajectory> trajectories;
  std::int64_t t0 = 0;
  std::int64_t dt = 0;
  std::uint32_t zoom = 24;

  std::size_t record_count() const;

  friend bool operator==(const TrajectorySet&, const TrajectorySet&) = default;
};

enum class CsvFormat { generic, tdrive };

struct ParseOptions {
  CsvFormat format = CsvFormat::generic;
  std::uint32_t zoom = 24;
  /// When set, records outside [t0, t0 + dt] are dropped. Otherwise the
  /// interval is the span of the data.
  bool has_window = false;
  std::int64_t t0 = 0;
  std::int64_t dt = 0;
};

struct IngestStats {
  std::size_t lines = 0;
  std::size_t header_lines = 0;
  std::size_t malformed = 0;
  std::size_t duplicate_drops = 0;
  std::size_t out_of_window = 0;
  std::vector<std::size_t> malformed_samples;  // 1-based line numbers, first few
};

struct ParsedSet {
  TrajectorySet set;
  IngestStats stats;
};

/// Parses `mover_id,epoch_seconds,lat,lon` (generic) or
/// `taxi_id,YYYY-MM-DD HH:MM:SS,lon,lat` (T-Drive, Beijing local time).
/// Records are grouped by mover in order of first appearance, sorted by time,
/// and equal timestamps keep the first occurrence. Malformed lines are
/// skipped unless they exceed half of the non-header lines.
ParsedSet parse_csv(std::istream& in, const ParseOptions& opts);
ParsedSet parse_csv_file(const std::string& path, const ParseOptions& opts);

/// Parses every regular file in a directory (sorted by name) or a single file,
/// concatenating the results before grouping.
ParsedSet parse_csv_path(const std::string& path, const ParseOptions& opts);

/// Writes the generic format. Coordinates use shortest round-trip formatting so
/// reparsing reproduces the set exactly.
void write_generic_csv(const TrajectorySet& set, std::ostream& out);

/// Seconds east of UTC used to find T-Drive calendar days.
inline constexpr std::int64_t kTdriveUtcOffset = 8 * 3600;

/// Converts `YYYY-MM-DD HH:MM:SS` local time at `utc_offset` to epoch seconds.
/// Returns false on malformed input.
bool parse_local_datetime(std::string_view text, std::int64_t utc_offset, std::int64_t& epoch);

/// yyyymmdd of the local calendar day containing epoch second t.
std::string local_day_stamp(std::int64_t t, std::int64_t utc_offset);

/// Splits each mover's records by local (UTC+8) calendar day. Each non-empty
/// (mover, day) becomes a trajectory named `mover_yyyymmdd`.
TrajectorySet preprocess_tdrive(const TrajectorySet& set);

/// Decides whether record k of `traj` is kept. `prev_kept` is the last record
/// kept so far in the same trajectory, or nullptr.
using RecordPredicate =
    std::function<bool(const Trajectory& traj, std::size_t k, const TrajectoryRecord* prev_kept)>;

RecordPredicate keep_all();

/// Drops records reached from the previous kept record faster than max_mps.
RecordPredicate max_speed_predicate(double max_mps);

/// Applies `keep` record by record; trajectories left empty are removed.
TrajectorySet modality_filter(const TrajectorySet& set, const RecordPredicate& keep);

/// Fills Trajectory::cumulative_m with haversine distances between
/// consecutive tile centroids.
void compute_cumulative_distances(Trajectory& traj);
std::vector<double> cumulative_distances(const std::vector<TrajectoryRecord>& records);

// --- synthetic data -------------------------------------------------------

enum class SynthModel { random_walk, road_grid };

/// Rectangular block of tiles [x0, x0 + w) x [y0, y0 + h) at zoom q.
struct TileWindow {
  std::uint32_t q = 24;
  std::uint32_t x0 = 0;
  std::uint32_t y0 = 0;
  std::uint32_t w = 0;
  std::uint32_t h = 0;

  bool contains(const TileCoord& t) const {
    return t.q == q && t.x >= x0 && t.x - x0 < w && t.y >= y0 && t.y - y0 < h;
  }
};

struct SynthSpec {
  std::uint64_t seed = 7;
  std::size_t count = 100;
  std::size_t n_min = 5;
  std::size_t n_max = 30;
  TileWindow grid{};
  SynthModel model = SynthModel::random_walk;
  /// Spacing of lattice lines for the road-grid model.
  std::uint32_t lattice_spacing = 8;
  std::int64_t t0 = 1201910400;  // 2008-02-02 00:00 Beijing
  std::int64_t dt = 7 * 86400;
};

/// A default window of 2048 x 2048 zoom-24 tiles around central Beijing.
TileWindow default_synth_grid();

/// 512 x 512 tiles around the same center; the benchmark presets concentrate
/// traffic here so trips share road tiles the way city-core data does.
TileWindow bench_grid();

TrajectorySet synth_trajectories(const SynthSpec& spec);

/// Road-grid preset on bench_grid() with 20 to 80 records per trip, used for
/// the scaling benchmark (2000, 8000 or 64000 trips).
SynthSpec bench_preset(std::size_t trips, std::uint64_t seed);

/// True when `t` lies on a lattice line of the road-grid model for `spec`.
bool on_lattice(const SynthSpec& spec, const TileCoord& t);

/// Order-sensitive FNV-1a digest of the set's content.
std::uint64_t digest(const TrajectorySet& set);

}  // namespace reach
