#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "reach/geodesy.hpp"
#include "reach/tensor_io.hpp"
#include "reach/trajectory.hpp"
#include "reach/transitions.hpp"

namespace reach {

struct SparseEntry {
  std::uint32_t idx = 0;
  double count = 0.0;
  friend bool operator==(const SparseEntry&, const SparseEntry&) = default;
};

/// Row-major index -> count, sorted by index, no zero entries.
class SparseChannel {
 public:
  SparseChannel() = default;
  /// Sorts, merges duplicate indices by addition and drops zeros.
  explicit SparseChannel(std::vector<SparseEntry> entries);

  double get(std::uint32_t idx) const;
  double sum() const;
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  std::span<const SparseEntry> entries() const { return entries_; }

  friend bool operator==(const SparseChannel&, const SparseChannel&) = default;

 private:
  std::vector<SparseEntry> entries_;
};

struct NodeSummary {
  TileCoord node;
  SparseChannel emission;
  SparseChannel absorption;
  friend bool operator==(const NodeSummary&, const NodeSummary&) = default;
};

struct Provenance {
  std::int64_t t0 = 0;
  std::int64_t dt = 0;
  friend bool operator==(const Provenance&, const Provenance&) = default;
};

/// Sparse emission/absorption accumulators for every active tile. Nodes are
/// kept sorted by (y, x); the map is immutable once built.
class ReachabilityMap {
 public:
  ReachabilityMap() = default;
  /// Sorts nodes into canonical order. Throws ParameterError on duplicates.
  ReachabilityMap(SummaryParams params, Provenance prov, std::vector<NodeSummary> nodes);

  const SummaryParams& params() const { return params_; }
  const Provenance& provenance() const { return provenance_; }
  std::span<const NodeSummary> nodes() const { return nodes_; }
  std::size_t size() const { return nodes_.size(); }
  bool empty() const { return nodes_.empty(); }

  /// nullptr when the tile is not active.
  const NodeSummary* find(const TileCoord& node) const;

  double total_emission() const;
  double total_absorption() const;

  friend bool operator==(const ReachabilityMap&, const ReachabilityMap&) = default;

 private:
  SummaryParams params_;
  Provenance provenance_;
  std::vector<NodeSummary> nodes_;
};

/// Data-parallel aggregation over `workers` threads. Each worker pulls
/// trajectory chunks, accumulates keyed partial sums sharded by node, and the
/// shards are then reduced in parallel. Throws ParameterError when
/// workers < 1 or the set zoom differs from params.q.
ReachabilityMap build_reachability_map(const TrajectorySet& set, const SummaryParams& params, unsigned workers);

/// Sequential transcription of the summary generator with ordered maps;
/// the testing oracle for build_reachability_map.
ReachabilityMap brute_force_reference(const TrajectorySet& set, const SummaryParams& params);

/// L x L x 2 tensor, layout [row = dy + delta_r][col = dx + delta_r][channel],
/// channel 0 = emission, channel 1 = absorption.
struct DenseSummary {
  TileCoord node;
  std::uint32_t delta_r = 0;
  std::vector<double> data;

  std::uint32_t side() const { return 2 * delta_r + 1; }
  double at(std::uint32_t row, std::uint32_t col, Channel ch) const {
    return data[(static_cast<std::size_t>(row) * side() + col) * 2 + static_cast<std::size_t>(ch)];
  }
  double sum(Channel ch) const;

  friend bool operator==(const DenseSummary&, const DenseSummary&) = default;
};

/// Throws NotFound for inactive nodes.
DenseSummary densify(const ReachabilityMap& map, const TileCoord& node);
/// All-zero tensor for inactive nodes.
DenseSummary densify_or_zero(const ReachabilityMap& map, const TileCoord& node);
/// Inverse of densify: returns the node's channels.
NodeSummary sparsify(const DenseSummary& dense);

// --- persistence ----------------------------------------------------------

std::string encode_rsum(const ReachabilityMap& map);
ReachabilityMap decode_rsum(std::string_view bytes);
void write_rsum(const ReachabilityMap& map, const std::string& path);
ReachabilityMap read_rsum(const std::string& path);

/// Stacks dense summaries of `nodes` (all active nodes when empty) into a
/// (count, L, L, 2) tensor.
Tensor dense_tensor(const ReachabilityMap& map, std::span<const TileCoord> nodes);

/// Writes the (count, L, L, 2) RTEN file plus `<path>.idx`, one `x,y` line
/// per tensor row. Returns the number of exported nodes.
std::size_t export_dense_tensors(const ReachabilityMap& map, std::span<const TileCoord> nodes,
                                 const std::string& path, DType dtype = DType::f64);

/// Reads an `.idx` sidecar written by export_dense_tensors.
std::vector<TileCoord> read_node_index(const std::string& path, std::uint32_t q);

}  // namespace reach
