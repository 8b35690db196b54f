#include "reach/markov.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <sstream>

#include "reach/error.hpp"

namespace reach {

ActiveIndex::ActiveIndex(std::vector<TileCoord> tiles) : tiles_(std::move(tiles)) {
  std::sort(tiles_.begin(), tiles_.end());
  tiles_.erase(std::unique(tiles_.begin(), tiles_.end()), tiles_.end());
}

std::optional<std::size_t> ActiveIndex::index_of(const TileCoord& t) const {
  auto it = std::lower_bound(tiles_.begin(), tiles_.end(), t);
  if (it == tiles_.end() || *it != t) return std::nullopt;
  return static_cast<std::size_t>(it - tiles_.begin());
}

namespace {

void check_states(std::size_t n) {
  if (n > kMaxDenseStates) {
    throw ParameterError(std::to_string(n) + " active tiles exceed the dense verifier limit of " +
                         std::to_string(kMaxDenseStates));
  }
}

void normalize_rows(TransitionMatrix& m) {
  for (std::size_t i = 0; i < m.n; ++i) {
    double z = 0.0;
    for (std::size_t j = 0; j < m.n; ++j) z += m.p[i * m.n + j];
    if (z <= 0.0) continue;
    for (std::size_t j = 0; j < m.n; ++j) m.p[i * m.n + j] /= z;
  }
}

TileCoord shifted(const TileCoord& s, const TileOffset& off) {
  return TileCoord{s.q, static_cast<std::uint32_t>(static_cast<std::int64_t>(s.x) + off.dx),
                   static_cast<std::uint32_t>(static_cast<std::int64_t>(s.y) + off.dy)};
}

}  // namespace

std::vector<WeightedEdge> raw_pair_counts(const TrajectorySet& set, const SummaryParams& params) {
  params.validate();
  std::vector<WeightedEdge> out;
  for (const auto& traj : set.trajectories) {
    const auto& r = traj.records;
    std::vector<double> d(r.size(), 0.0);
    for (std::size_t k = 1; k < r.size(); ++k) {
      d[k] = d[k - 1] + haversine_m(tile_centroid(r[k - 1].tile), tile_centroid(r[k].tile));
    }
    for (std::size_t k = 0; k < r.size(); ++k) {
      for (std::size_t l = k; l < r.size(); ++l) {
        if (!in_neighborhood(r[k].tile, r[l].tile, params.delta_r)) continue;
        double w = 1.0;
        if (params.weighting == Weighting::gaussian) {
          w = gaussian_weight(d[l] - d[k], static_cast<double>(r[l].t - r[k].t), params.sigma_d, params.sigma_t);
        }
        out.push_back(WeightedEdge{r[k].tile, r[l].tile, w});
      }
    }
  }
  return out;
}

TransitionMatrix build_transition_matrix(std::span<const WeightedEdge> edges) {
  std::vector<TileCoord> tiles;
  for (const auto& e : edges) {
    tiles.push_back(e.src);
    tiles.push_back(e.dst);
  }
  TransitionMatrix m;
  m.index = ActiveIndex(std::move(tiles));
  m.n = m.index.size();
  check_states(m.n);
  m.p.assign(m.n * m.n, 0.0);
  for (const auto& e : edges) {
    m.p[*m.index.index_of(e.src) * m.n + *m.index.index_of(e.dst)] += e.weight;
  }
  normalize_rows(m);
  return m;
}

TransitionMatrix build_transition_matrix(const ReachabilityMap& map) {
  std::vector<TileCoord> tiles;
  for (const auto& ns : map.nodes()) tiles.push_back(ns.node);
  TransitionMatrix m;
  m.index = ActiveIndex(std::move(tiles));
  m.n = m.index.size();
  check_states(m.n);
  m.p.assign(m.n * m.n, 0.0);
  const auto delta_r = map.params().delta_r;
  for (std::size_t i = 0; i < m.n; ++i) {
    const auto& ns = map.nodes()[i];
    for (const auto& e : ns.absorption.entries()) {
      const auto dst = m.index.index_of(shifted(ns.node, inverse_index(e.idx, delta_r)));
      if (!dst) throw FormatError("absorption entry points at an inactive tile");
      m.p[i * m.n + *dst] += e.count;
    }
  }
  normalize_rows(m);
  return m;
}

std::vector<double> scale(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += v;
  if (!(s > 0.0)) throw DomainError("scale() needs a positive sum");
  std::vector<double> out(x.begin(), x.end());
  for (auto& v : out) v /= s;
  return out;
}

std::vector<double> two_step(const TransitionMatrix& m) {
  using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  const auto n = static_cast<Eigen::Index>(m.n);
  Eigen::Map<const RowMajor> p(m.p.data(), n, n);
  std::vector<double> out(m.n * m.n);
  Eigen::Map<RowMajor> sq(out.data(), n, n);
  sq.noalias() = p * p;
  return out;
}

double contribution(const TransitionMatrix& m, std::size_t via, std::size_t from, std::size_t to) {
  if (via >= m.n || from >= m.n || to >= m.n) throw DomainError("state index out of range");
  return m.at(from, via) * m.at(via, to);
}

std::uint32_t required_delta_r(const TrajectorySet& set) {
  std::uint32_t need = 1;
  for (const auto& traj : set.trajectories) {
    if (traj.records.empty()) continue;
    auto [xmin, xmax] = std::minmax_element(traj.records.begin(), traj.records.end(),
                                            [](const auto& a, const auto& b) { return a.tile.x < b.tile.x; });
    auto [ymin, ymax] = std::minmax_element(traj.records.begin(), traj.records.end(),
                                            [](const auto& a, const auto& b) { return a.tile.y < b.tile.y; });
    need = std::max({need, xmax->tile.x - xmin->tile.x, ymax->tile.y - ymin->tile.y});
  }
  return need;
}

bool touches_neighborhood_border(const ReachabilityMap& map) {
  const std::int64_t d = map.params().delta_r;
  for (const auto& ns : map.nodes()) {
    for (const auto& e : ns.absorption.entries()) {
      const auto off = inverse_index(e.idx, map.params().delta_r);
      if (std::abs(off.dx) == d || std::abs(off.dy) == d) return true;
    }
  }
  return false;
}

CkeReport cke_verify(const ReachabilityMap& map, bool truncated) {
  CkeReport rep;
  rep.states = map.size();
  if (truncated) {
    rep.status = CkeStatus::not_applicable;
    rep.note = "neighborhood truncates observed transitions; the channels do not describe the full chain";
    return rep;
  }
  if (map.empty()) {
    rep.status = CkeStatus::not_applicable;
    rep.note = "empty reachability map";
    return rep;
  }

  const auto m = build_transition_matrix(map);
  const auto sq = two_step(m);
  // long double keeps the brute-force side well below the tolerance
  long double lhs = 0.0L;
  for (double v : sq) lhs += v;

  const auto delta_r = map.params().delta_r;
  long double rhs = 0.0L, rhs_nu = 0.0L;
  for (const auto& z : map.nodes()) {
    // phi_e(z)[s'] = w(s' -> z) / Z(s'), read from z's emission channel
    long double sum_e = 0.0L;
    for (const auto& e : z.emission.entries()) {
      const auto* src = map.find(shifted(z.node, inverse_index(e.idx, delta_r)));
      if (src == nullptr) throw FormatError("emission entry points at an inactive tile");
      const double row_sum = src->absorption.sum();
      if (row_sum > 0.0) sum_e += e.count / row_sum;
    }
    // phi_a(z)[s''] = w(z -> s'') / Z(z)
    const double z_row = z.absorption.sum();
    long double sum_a = 0.0L;
    if (z_row > 0.0) {
      for (const auto& e : z.absorption.entries()) sum_a += e.count / z_row;
    }
    rhs += sum_e * sum_a;
    rhs_nu += (sum_e * z.emission.sum()) * (sum_a * z_row);
  }

  rep.lhs = static_cast<double>(lhs);
  rep.rhs = static_cast<double>(rhs);
  rep.rhs_nu_scaled = static_cast<double>(rhs_nu);
  rep.residual = std::abs(rep.lhs - rep.rhs);
  rep.status = rep.residual < kCkeTolerance ? CkeStatus::pass : CkeStatus::fail;
  rep.note = "probability-vector form; rhs_nu_scaled shows the same sum with nu-scaled channels";
  return rep;
}

std::string CkeReport::to_text() const {
  std::ostringstream out;
  const char* st = status == CkeStatus::pass ? "pass" : status == CkeStatus::fail ? "fail" : "not-applicable";
  out.precision(17);
  out << "Chapman-Kolmogorov check over " << states << " active tiles: " << st << '\n';
  if (!note.empty()) out << "  " << note << '\n';
  out << "states=" << states << '\n';
  out << "lhs=" << lhs << '\n';
  out << "rhs=" << rhs << '\n';
  out << "rhs_nu_scaled=" << rhs_nu_scaled << '\n';
  out << "residual=" << residual << '\n';
  out << "status=" << st << '\n';
  return out.str();
}

}  // namespace reach
