#include "reach/summary.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <thread>

#include <absl/container/flat_hash_map.h>

#include "reach/binary_io.hpp"
#include "reach/error.hpp"

namespace reach {

// --- SparseChannel / ReachabilityMap --------------------------------------

SparseChannel::SparseChannel(std::vector<SparseEntry> entries) {
  std::sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) { return a.idx < b.idx; });
  for (const auto& e : entries) {
    if (!entries_.empty() && entries_.back().idx == e.idx) {
      entries_.back().count += e.count;
    } else {
      entries_.push_back(e);
    }
  }
  std::erase_if(entries_, [](const SparseEntry& e) { return e.count == 0.0; });
}

double SparseChannel::get(std::uint32_t idx) const {
  auto it = std::lower_bound(entries_.begin(), entries_.end(), idx,
                             [](const SparseEntry& e, std::uint32_t i) { return e.idx < i; });
  return it != entries_.end() && it->idx == idx ? it->count : 0.0;
}

double SparseChannel::sum() const {
  double s = 0.0;
  for (const auto& e : entries_) s += e.count;
  return s;
}

ReachabilityMap::ReachabilityMap(SummaryParams params, Provenance prov, std::vector<NodeSummary> nodes)
    : params_(params), provenance_(prov), nodes_(std::move(nodes)) {
  std::sort(nodes_.begin(), nodes_.end(), [](const auto& a, const auto& b) { return a.node < b.node; });
  for (std::size_t i = 1; i < nodes_.size(); ++i) {
    if (nodes_[i].node == nodes_[i - 1].node) throw ParameterError("duplicate node in reachability map");
  }
}

const NodeSummary* ReachabilityMap::find(const TileCoord& node) const {
  auto it = std::lower_bound(nodes_.begin(), nodes_.end(), node,
                             [](const NodeSummary& n, const TileCoord& t) { return n.node < t; });
  return it != nodes_.end() && it->node == node ? &*it : nullptr;
}

double ReachabilityMap::total_emission() const {
  double s = 0.0;
  for (const auto& n : nodes_) s += n.emission.sum();
  return s;
}

double ReachabilityMap::total_absorption() const {
  double s = 0.0;
  for (const auto& n : nodes_) s += n.absorption.sum();
  return s;
}

// --- parallel build -----------------------------------------------------------

namespace {

struct AccKey {
  std::uint64_t node;  // (y << 32) | x
  std::uint32_t slot;  // 2 * rm_idx + channel
  bool operator==(const AccKey&) const = default;
};

inline std::uint64_t mix64(std::uint64_t k) {
  k ^= k >> 33;
  k *= 0xff51afd7ed558ccdULL;
  k ^= k >> 33;
  k *= 0xc4ceb9fe1a85ec53ULL;
  k ^= k >> 33;
  return k;
}

struct AccKeyHash {
  std::size_t operator()(const AccKey& k) const noexcept {
    return static_cast<std::size_t>(mix64(k.node * 0x9e3779b97f4a7c15ULL + k.slot));
  }
};

using Accumulator = absl::flat_hash_map<AccKey, double, AccKeyHash>;

inline std::uint64_t pack(const TileCoord& t) { return (std::uint64_t{t.y} << 32) | t.x; }

inline std::size_t shard_of(std::uint64_t node, std::size_t shards) {
  return shards == 1 ? 0 : static_cast<std::size_t>(mix64(node) % shards);
}

std::vector<NodeSummary> reduce_shard(std::vector<Accumulator*> parts, std::uint32_t q) {
  Accumulator merged = std::move(*parts.front());
  for (std::size_t i = 1; i < parts.size(); ++i) {
    for (const auto& [k, v] : *parts[i]) merged[k] += v;
    Accumulator().swap(*parts[i]);
  }
  absl::flat_hash_map<std::uint64_t, std::pair<std::vector<SparseEntry>, std::vector<SparseEntry>>> grouped;
  for (const auto& [k, v] : merged) {
    auto& g = grouped[k.node];
    const SparseEntry e{k.slot >> 1, v};
    if ((k.slot & 1u) == static_cast<std::uint32_t>(Channel::emission)) {
      g.first.push_back(e);
    } else {
      g.second.push_back(e);
    }
  }
  std::vector<NodeSummary> out;
  out.reserve(grouped.size());
  for (auto& [node, channels] : grouped) {
    NodeSummary ns{TileCoord{q, static_cast<std::uint32_t>(node & 0xffffffffu), static_cast<std::uint32_t>(node >> 32)},
                   SparseChannel(std::move(channels.first)), SparseChannel(std::move(channels.second))};
    if (ns.emission.empty() && ns.absorption.empty()) continue;
    out.push_back(std::move(ns));
  }
  return out;
}

void check_build_inputs(const TrajectorySet& set, const SummaryParams& params) {
  params.validate();
  if (set.zoom != params.q) {
    throw ParameterError("trajectory zoom " + std::to_string(set.zoom) + " differs from summary zoom " +
                         std::to_string(params.q));
  }
}

}  // namespace

ReachabilityMap build_reachability_map(const TrajectorySet& set, const SummaryParams& params, unsigned workers) {
  if (workers < 1) throw ParameterError("workers must be >= 1");
  check_build_inputs(set, params);

  const std::size_t w = workers;
  const std::size_t m = set.trajectories.size();
  // Trajectories are never split. Chunks go to workers round-robin so the
  // partial sums, and hence the merge order, depend only on the worker count.
  const std::size_t chunk = std::max<std::size_t>(1, m / (w * 32));
  const std::size_t chunks = (m + chunk - 1) / chunk;

  std::vector<std::vector<Accumulator>> local(w, std::vector<Accumulator>(w));

  auto map_phase = [&](std::size_t wid) {
    auto& shards = local[wid];
    auto sink = [&](const Contribution& c) {
      const auto node = pack(c.node);
      shards[shard_of(node, w)][AccKey{node, 2 * c.rm_idx + static_cast<std::uint32_t>(c.flag)}] += c.count;
    };
    for (std::size_t ci = wid; ci < chunks; ci += w) {
      const std::size_t end = std::min(m, (ci + 1) * chunk);
      for (std::size_t i = ci * chunk; i < end; ++i) for_each_contribution(set.trajectories[i], params, sink);
    }
  };

  std::vector<std::vector<NodeSummary>> reduced(w);
  auto reduce_phase = [&](std::size_t shard) {
    std::vector<Accumulator*> parts;
    for (std::size_t i = 0; i < w; ++i) parts.push_back(&local[i][shard]);
    reduced[shard] = reduce_shard(std::move(parts), params.q);
  };

  auto run = [w](auto&& fn) {
    if (w == 1) {
      fn(0);
      return;
    }
    std::vector<std::jthread> pool;
    pool.reserve(w);
    for (std::size_t i = 0; i < w; ++i) pool.emplace_back(fn, i);
  };
  run(map_phase);
  run(reduce_phase);

  std::size_t total = 0;
  for (const auto& r : reduced) total += r.size();
  std::vector<NodeSummary> nodes;
  nodes.reserve(total);
  for (auto& r : reduced) std::move(r.begin(), r.end(), std::back_inserter(nodes));
  return ReachabilityMap(params, Provenance{set.t0, set.dt}, std::move(nodes));
}

ReachabilityMap brute_force_reference(const TrajectorySet& set, const SummaryParams& params) {
  check_build_inputs(set, params);
  std::map<TileCoord, std::pair<std::map<std::uint32_t, double>, std::map<std::uint32_t, double>>> s;

  for (const auto& traj : set.trajectories) {
    const auto& z = traj.records;
    const std::size_t n = z.size();
    std::vector<double> d(n, 0.0);
    for (std::size_t k = 1; k < n; ++k) {
      const double step = z[k - 1].tile == z[k].tile ? 0.0 : haversine_m(tile_centroid(z[k - 1].tile), tile_centroid(z[k].tile));
      d[k] = d[k - 1] + step;
    }
    for (std::size_t k = 0; k < n; ++k) {
      for (std::size_t l = k; l < n; ++l) {
        if (!in_neighborhood(z[k].tile, z[l].tile, params.delta_r)) continue;
        auto& sk = s[z[k].tile];
        auto& sl = s[z[l].tile];
        const auto r_kl = row_major_index(z[k].tile, z[l].tile, params.delta_r);
        const auto r_lk = row_major_index(z[l].tile, z[k].tile, params.delta_r);
        double c = 1.0;
        if (params.weighting == Weighting::gaussian) {
          c = gaussian_weight(d[l] - d[k], static_cast<double>(z[l].t - z[k].t), params.sigma_d, params.sigma_t);
        }
        sk.second[r_kl] += c;
        sl.first[r_lk] += c;
      }
    }
  }

  std::vector<NodeSummary> nodes;
  for (const auto& [tile, ch] : s) {
    std::vector<SparseEntry> e, a;
    for (const auto& [i, c] : ch.first) e.push_back({i, c});
    for (const auto& [i, c] : ch.second) a.push_back({i, c});
    NodeSummary ns{tile, SparseChannel(std::move(e)), SparseChannel(std::move(a))};
    if (ns.emission.empty() && ns.absorption.empty()) continue;
    nodes.push_back(std::move(ns));
  }
  return ReachabilityMap(params, Provenance{set.t0, set.dt}, std::move(nodes));
}

// --- dense views ----------------------------------------------------------

double DenseSummary::sum(Channel ch) const {
  double s = 0.0;
  for (std::size_t i = static_cast<std::size_t>(ch); i < data.size(); i += 2) s += data[i];
  return s;
}

namespace {

DenseSummary scatter(const TileCoord& node, std::uint32_t delta_r, const NodeSummary* ns) {
  DenseSummary out{node, delta_r, {}};
  const std::size_t cells = static_cast<std::size_t>(out.side()) * out.side();
  out.data.assign(cells * 2, 0.0);
  if (ns == nullptr) return out;
  for (const auto& e : ns->emission.entries()) out.data[std::size_t{e.idx} * 2] = e.count;
  for (const auto& e : ns->absorption.entries()) out.data[std::size_t{e.idx} * 2 + 1] = e.count;
  return out;
}

}  // namespace

DenseSummary densify(const ReachabilityMap& map, const TileCoord& node) {
  const auto* ns = map.find(node);
  if (ns == nullptr) {
    throw NotFound("tile (" + std::to_string(node.x) + "," + std::to_string(node.y) + ") is not active");
  }
  return scatter(node, map.params().delta_r, ns);
}

DenseSummary densify_or_zero(const ReachabilityMap& map, const TileCoord& node) {
  return scatter(node, map.params().delta_r, map.find(node));
}

NodeSummary sparsify(const DenseSummary& dense) {
  std::vector<SparseEntry> e, a;
  const std::size_t cells = dense.data.size() / 2;
  for (std::size_t i = 0; i < cells; ++i) {
    if (dense.data[2 * i] != 0.0) e.push_back({static_cast<std::uint32_t>(i), dense.data[2 * i]});
    if (dense.data[2 * i + 1] != 0.0) a.push_back({static_cast<std::uint32_t>(i), dense.data[2 * i + 1]});
  }
  return NodeSummary{dense.node, SparseChannel(std::move(e)), SparseChannel(std::move(a))};
}

// --- RSUM -----------------------------------------------------------------

namespace {

constexpr std::string_view kRsumMagic = "RSUM1";

void put_channel(io::ByteWriter& w, const SparseChannel& ch) {
  w.u32(static_cast<std::uint32_t>(ch.size()));
  for (const auto& e : ch.entries()) {
    w.u32(e.idx);
    w.f64(e.count);
  }
}

SparseChannel get_channel(io::ByteReader& r, std::uint32_t cells) {
  const auto nnz = r.u32();
  if (nnz > cells) r.fail("channel holds " + std::to_string(nnz) + " entries, window has " + std::to_string(cells));
  if (r.remaining() < std::size_t{nnz} * 12) r.fail("truncated channel");
  std::vector<SparseEntry> entries;
  entries.reserve(nnz);
  for (std::uint32_t i = 0; i < nnz; ++i) {
    const auto at = r.offset();
    const auto idx = r.u32();
    const auto count = r.f64();
    if (idx >= cells) r.fail("row-major index " + std::to_string(idx) + " out of range", at);
    if (!entries.empty() && idx <= entries.back().idx) r.fail("channel indices not strictly increasing", at);
    if (!std::isfinite(count) || count <= 0.0) r.fail("count must be finite and positive", at + 4);
    entries.push_back({idx, count});
  }
  return SparseChannel(std::move(entries));
}

}  // namespace

std::string encode_rsum(const ReachabilityMap& map) {
  const auto& p = map.params();
  io::ByteWriter w;
  w.bytes(kRsumMagic);
  w.u32(p.q);
  w.u32(p.delta_r);
  w.u8(static_cast<std::uint8_t>(p.weighting));
  w.f64(p.sigma_d);
  w.f64(p.sigma_t);
  w.i64(map.provenance().t0);
  w.i64(map.provenance().dt);
  w.u64(map.size());
  for (const auto& n : map.nodes()) {
    w.u32(n.node.x);
    w.u32(n.node.y);
    put_channel(w, n.emission);
    put_channel(w, n.absorption);
  }
  return w.release();
}

ReachabilityMap decode_rsum(std::string_view bytes) {
  io::ByteReader r(bytes, "RSUM");
  const auto magic = r.bytes(kRsumMagic.size());
  if (magic.substr(0, 4) != kRsumMagic.substr(0, 4)) r.fail("bad magic", 0);
  if (magic != kRsumMagic) r.fail("unsupported version '" + std::string(magic.substr(4)) + "'", 4);

  SummaryParams p;
  const auto q_at = r.offset();
  p.q = r.u32();
  if (p.q < 1 || p.q > kMaxZoom) r.fail("zoom out of range", q_at);
  const auto d_at = r.offset();
  p.delta_r = r.u32();
  if (p.delta_r < 1 || p.delta_r > kMaxDeltaR) r.fail("delta_r out of range", d_at);
  const auto w_at = r.offset();
  const auto weighting = r.u8();
  if (weighting > 1) r.fail("unknown weighting " + std::to_string(weighting), w_at);
  p.weighting = static_cast<Weighting>(weighting);
  p.sigma_d = r.f64();
  p.sigma_t = r.f64();
  Provenance prov;
  prov.t0 = r.i64();
  prov.dt = r.i64();
  const auto count_at = r.offset();
  const auto count = r.u64();
  // each node needs at least 16 bytes
  if (count > r.remaining() / 16) r.fail("node count " + std::to_string(count) + " exceeds file size", count_at);

  const std::uint32_t cells = p.cells();
  const auto n_axis = tiles_per_axis(p.q);
  std::vector<NodeSummary> nodes;
  nodes.reserve(count);
  for (std::uint64_t i = 0; i < count; ++i) {
    const auto at = r.offset();
    NodeSummary ns;
    ns.node.q = p.q;
    ns.node.x = r.u32();
    ns.node.y = r.u32();
    if (ns.node.x >= n_axis || ns.node.y >= n_axis) r.fail("tile outside zoom grid", at);
    if (!nodes.empty() && !(nodes.back().node < ns.node)) r.fail("nodes not in canonical (y, x) order", at);
    ns.emission = get_channel(r, cells);
    ns.absorption = get_channel(r, cells);
    if (ns.emission.empty() && ns.absorption.empty()) r.fail("node without entries", at);
    nodes.push_back(std::move(ns));
  }
  if (!r.at_end()) r.fail("trailing bytes");
  return ReachabilityMap(p, prov, std::move(nodes));
}

void write_rsum(const ReachabilityMap& map, const std::string& path) {
  io::write_file_atomic(path, encode_rsum(map));
}

ReachabilityMap read_rsum(const std::string& path) { return decode_rsum(io::read_file(path)); }

// --- tensor export ------------------------------------------------------------

Tensor dense_tensor(const ReachabilityMap& map, std::span<const TileCoord> nodes) {
  std::vector<TileCoord> order;
  if (nodes.empty()) {
    for (const auto& n : map.nodes()) order.push_back(n.node);
  } else {
    order.assign(nodes.begin(), nodes.end());
  }
  const std::uint32_t side = map.params().side();
  Tensor t;
  t.dtype = DType::f64;
  t.dims = {static_cast<std::uint32_t>(order.size()), side, side, 2};
  t.values.reserve(t.element_count());
  for (const auto& node : order) {
    const auto d = densify(map, node);
    t.values.insert(t.values.end(), d.data.begin(), d.data.end());
  }
  return t;
}

std::size_t export_dense_tensors(const ReachabilityMap& map, std::span<const TileCoord> nodes,
                                 const std::string& path, DType dtype) {
  Tensor t = dense_tensor(map, nodes);
  t.dtype = dtype;
  std::ostringstream idx;
  if (nodes.empty()) {
    for (const auto& n : map.nodes()) idx << n.node.x << ',' << n.node.y << '\n';
  } else {
    for (const auto& n : nodes) idx << n.x << ',' << n.y << '\n';
  }
  io::write_file_atomic(path + ".idx", idx.str());
  write_rten(t, path);
  return t.dims[0];
}

std::vector<TileCoord> read_node_index(const std::string& path, std::uint32_t q) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  std::vector<TileCoord> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    unsigned long long x = 0, y = 0;
    char comma = 0;
    std::istringstream ls(line);
    if (!(ls >> x >> comma >> y) || comma != ',' || x >= tiles_per_axis(q) || y >= tiles_per_axis(q)) {
      throw FormatError(path + ": bad node index line " + std::to_string(lineno));
    }
    out.push_back(TileCoord{q, static_cast<std::uint32_t>(x), static_cast<std::uint32_t>(y)});
  }
  return out;
}

}  // namespace reach
