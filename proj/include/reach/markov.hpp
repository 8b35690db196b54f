#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "reach/geodesy.hpp"
#include "reach/summary.hpp"
#include "reach/trajectory.hpp"

namespace reach {

/// Largest active-tile count the dense verifier accepts.
inline constexpr std::size_t kMaxDenseStates = 5000;

/// Bijection between active tiles and [0, N), ordered by (y, x).
class ActiveIndex {
 public:
  ActiveIndex() = default;
  /// Sorts and deduplicates.
  explicit ActiveIndex(std::vector<TileCoord> tiles);

  std::size_t size() const { return tiles_.size(); }
  const TileCoord& tile(std::size_t i) const { return tiles_.at(i); }
  std::optional<std::size_t> index_of(const TileCoord& t) const;
  std::span<const TileCoord> tiles() const { return tiles_; }

 private:
  std::vector<TileCoord> tiles_;
};

/// Dense row-major N x N transition probabilities. Rows with outgoing mass
/// sum to one; rows without stay zero.
struct TransitionMatrix {
  ActiveIndex index;
  std::size_t n = 0;
  std::vector<double> p;

  double at(std::size_t from, std::size_t to) const { return p[from * n + to]; }
};

struct WeightedEdge {
  TileCoord src;
  TileCoord dst;
  double weight = 0.0;
};

/// Weighted transitions (k <= l pairs inside the neighborhood) counted
/// straight from trajectories, without going through the summary engine.
std::vector<WeightedEdge> raw_pair_counts(const TrajectorySet& set, const SummaryParams& params);

/// Normalizes each row of W by its sum Z. Throws ParameterError above
/// kMaxDenseStates states.
TransitionMatrix build_transition_matrix(std::span<const WeightedEdge> edges);
/// W scattered back from the absorption channels of `map`.
TransitionMatrix build_transition_matrix(const ReachabilityMap& map);

/// X / sum(X). Throws DomainError when the sum is not positive.
std::vector<double> scale(std::span<const double> x);

/// P^2 by dense matrix multiplication.
std::vector<double> two_step(const TransitionMatrix& m);

/// Contribution of intermediate state `via` to the two-step probability
/// from -> to: P(from, via) * P(via, to). Throws DomainError on bad indices.
double contribution(const TransitionMatrix& m, std::size_t via, std::size_t from, std::size_t to);

/// Smallest delta_r under which no record pair of any trajectory is dropped.
std::uint32_t required_delta_r(const TrajectorySet& set);

enum class CkeStatus { pass, fail, not_applicable };

struct CkeReport {
  CkeStatus status = CkeStatus::not_applicable;
  std::size_t states = 0;
  double lhs = 0.0;           // sum over all (s', s'') of (P^2)
  double rhs = 0.0;           // sum over z of sum(phi_e(z)) * sum(phi_a(z))
  double residual = 0.0;
  double rhs_nu_scaled = 0.0;  // same sum with channels scaled by nu_e, nu_a
  std::string note;

  /// Human-readable summary followed by key=value lines.
  std::string to_text() const;
};

inline constexpr double kCkeTolerance = 1e-9;

/// Verifies sum(P^2) = sum_z phi_e(z)^T 1 1^T phi_a(z) where the phi vectors
/// are built from the emission/absorption channels of z divided by the row
/// sum of the source node. `truncated` marks maps whose neighborhood dropped
/// observed transitions; the report is then not-applicable.
CkeReport cke_verify(const ReachabilityMap& map, bool truncated);

/// Heuristic for maps without their source: any entry on the border of the
/// L x L window means transitions may have been cut off.
bool touches_neighborhood_border(const ReachabilityMap& map);

}  // namespace reach
