#include "reach/transitions.hpp"

#include <cmath>
#include <string>

#include "reach/error.hpp"

namespace reach {

void SummaryParams::validate() const {
  if (q < 1 || q > kMaxZoom) throw ParameterError("zoom must be in [1, 30]");
  if (delta_r < 1) throw ParameterError("delta_r must be a positive integer");
  if (delta_r > kMaxDeltaR) throw ParameterError("delta_r above " + std::to_string(kMaxDeltaR));
  if (weighting == Weighting::gaussian) {
    if (!(sigma_d > 0) || !(sigma_t > 0) || !std::isfinite(sigma_d) || !std::isfinite(sigma_t)) {
      throw ParameterError("sigma_d and sigma_t must be positive for gaussian weighting");
    }
  }
}

std::uint32_t row_major_index(const TileCoord& s, const TileCoord& s2, std::uint32_t delta_r) {
  const auto off = tile_offset(s, s2);
  const std::int64_t d = delta_r;
  if (off.dx > d || off.dx < -d || off.dy > d || off.dy < -d) {
    throw OutOfNeighborhood("offset (" + std::to_string(off.dx) + "," + std::to_string(off.dy) +
                            ") outside reachable neighborhood of radius " + std::to_string(delta_r));
  }
  const std::int64_t side = 2 * d + 1;
  return static_cast<std::uint32_t>(side * (off.dy + d) + (off.dx + d));
}

TileOffset inverse_index(std::uint32_t idx, std::uint32_t delta_r) {
  const std::int64_t side = 2 * std::int64_t{delta_r} + 1;
  if (idx >= side * side) {
    throw DomainError("row-major index " + std::to_string(idx) + " outside [0, " + std::to_string(side * side) + ")");
  }
  return TileOffset{static_cast<std::int64_t>(idx % side) - delta_r, static_cast<std::int64_t>(idx / side) - delta_r};
}

double gaussian_weight(double dd, double dt, double sigma_d, double sigma_t) {
  const double gd = std::exp(-dd * dd / (2.0 * sigma_d * sigma_d));
  const double gt = std::exp(-dt * dt / (2.0 * sigma_t * sigma_t));
  return gaussian_peak(sigma_d, sigma_t) * gd * gt;
}

std::vector<Contribution> generate_contributions(const Trajectory& traj, const SummaryParams& p) {
  std::vector<Contribution> out;
  for_each_contribution(traj, p, [&out](const Contribution& c) { out.push_back(c); });
  return out;
}

namespace detail {

std::vector<double> cumulative_for(const Trajectory& traj) {
  return cumulative_distances(traj.records);
}

}  // namespace detail

}  // namespace reach
