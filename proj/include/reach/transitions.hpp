#pragma once

#include <cstdint>
#include <numbers>
#include <vector>

#include "reach/geodesy.hpp"
#include "reach/trajectory.hpp"

namespace reach {

/// Upper bound on delta_r; keeps 2 * L^2 inside a u32.
inline constexpr std::uint32_t kMaxDeltaR = 16384;

enum class Weighting : std::uint8_t { unit = 0, gaussian = 1 };

/// Parameters of summary generation. L = 2 * delta_r + 1.
struct SummaryParams {
  std::uint32_t q = 24;
  std::uint32_t delta_r = 12;
  Weighting weighting = Weighting::unit;
  double sigma_d = 100.0;  // meters
  double sigma_t = 60.0;   // seconds

  std::uint32_t side() const { return 2 * delta_r + 1; }
  std::uint32_t cells() const { return side() * side(); }

  /// Throws ParameterError on zoom out of range, delta_r == 0 or
  /// non-positive sigmas in gaussian mode.
  void validate() const;

  friend bool operator==(const SummaryParams&, const SummaryParams&) = default;
};

enum class Channel : std::uint8_t { emission = 0, absorption = 1 };

/// One keyed increment of the reachability map.
struct Contribution {
  TileCoord node;
  std::uint32_t rm_idx = 0;
  Channel flag = Channel::absorption;
  double count = 0.0;

  friend bool operator==(const Contribution&, const Contribution&) = default;
};

/// Row-major position of s2 in the L x L window centered on s:
/// L * (dy + delta_r) + (dx + delta_r). Throws OutOfNeighborhood.
std::uint32_t row_major_index(const TileCoord& s, const TileCoord& s2, std::uint32_t delta_r);

/// Inverse of row_major_index. Throws DomainError when idx >= L^2.
TileOffset inverse_index(std::uint32_t idx, std::uint32_t delta_r);

/// Index of the opposite offset: inverse_index(mirror) == -inverse_index(idx).
inline std::uint32_t mirror_index(std::uint32_t idx, std::uint32_t delta_r) {
  const std::uint32_t side = 2 * delta_r + 1;
  return side * side - 1 - idx;
}

inline std::uint32_t center_index(std::uint32_t delta_r) { return (2 * delta_r + 1) * delta_r + delta_r; }

/// G(d, sigma_d) * G(t, sigma_t) with G(mu, sigma) = exp(-mu^2 / 2 sigma^2) / (sqrt(2 pi) sigma).
double gaussian_weight(double dd, double dt, double sigma_d, double sigma_t);

/// Peak value of gaussian_weight, attained at (0, 0).
inline double gaussian_peak(double sigma_d, double sigma_t) {
  return 1.0 / (2.0 * std::numbers::pi * sigma_d * sigma_t);
}

/// Emits the matched absorption/emission contributions of every ordered
/// record pair k <= l whose tiles lie within delta_r of each other. `sink` is
/// called as sink(const Contribution&). Gaussian weighting uses
/// traj.cumulative_m when present, otherwise computes it on the fly.
template <typename Sink>
void for_each_contribution(const Trajectory& traj, const SummaryParams& p, Sink&& sink);

/// Collects for_each_contribution output into a vector.
std::vector<Contribution> generate_contributions(const Trajectory& traj, const SummaryParams& p);

// --- implementation -----------------------------------------------------

namespace detail {
std::vector<double> cumulative_for(const Trajectory& traj);
}

template <typename Sink>
void for_each_contribution(const Trajectory& traj, const SummaryParams& p, Sink&& sink) {
  const auto& recs = traj.records;
  const std::size_t n = recs.size();
  if (n == 0) return;
  const std::int64_t d = p.delta_r;
  const std::int64_t side = p.side();
  const bool gaussian = p.weighting == Weighting::gaussian;

  std::vector<double> local;
  const std::vector<double>* cum = nullptr;
  if (gaussian) {
    if (traj.cumulative_m.size() == n) {
      cum = &traj.cumulative_m;
    } else {
      local = detail::cumulative_for(traj);
      cum = &local;
    }
  }

  for (std::size_t k = 0; k < n; ++k) {
    const auto& zk = recs[k].tile;
    for (std::size_t l = k; l < n; ++l) {
      const auto& zl = recs[l].tile;
      const std::int64_t dx = static_cast<std::int64_t>(zl.x) - static_cast<std::int64_t>(zk.x);
      const std::int64_t dy = static_cast<std::int64_t>(zl.y) - static_cast<std::int64_t>(zk.y);
      if (dx > d || dx < -d || dy > d || dy < -d) continue;
      const auto fwd = static_cast<std::uint32_t>(side * (dy + d) + (dx + d));
      const auto back = static_cast<std::uint32_t>(side * (d - dy) + (d - dx));
      double c = 1.0;
      if (gaussian) {
        c = gaussian_weight((*cum)[l] - (*cum)[k], static_cast<double>(recs[l].t - recs[k].t), p.sigma_d,
                            p.sigma_t);
      }
      sink(Contribution{zk, fwd, Channel::absorption, c});
      sink(Contribution{zl, back, Channel::emission, c});
    }
  }
}

}  // namespace reach
