// Copyright 2026 PaxNet contributors
// SPDX-License-Identifier: Apache-2.0

#include "paxnet/graph.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <limits>

#include "binary_io.hpp"
#include "paxnet/error.hpp"

namespace paxnet {

namespace {

constexpr char kGraphMagic[4] = {'P', 'X', 'G', 'R'};
constexpr std::uint32_t kGraphVersion = 1;

void canonical_sort(std::vector<Edge>& edges) {
  std::sort(edges.begin(), edges.end(), [](const Edge& a, const Edge& b) {
    return a.dst != b.dst ? a.dst < b.dst : a.src < b.src;
  });
}

[[noreturn]] void throw_coincident(std::size_t i, std::size_t j) {
  throw StructureError("coincident atoms " + std::to_string(std::min(i, j)) +
                       " and " + std::to_string(std::max(i, j)) +
                       " (zero distance)");
}

// Both neighbor searches share this predicate so their pair sets agree
// bit-for-bit.
inline bool within_cutoff(const Eigen::Vector3d& a, const Eigen::Vector3d& b,
                          double cutoff_sq, double* dist_sq) {
  *dist_sq = (a - b).squaredNorm();
  return *dist_sq <= cutoff_sq;
}

double angle_at(const Eigen::Vector3d& vertex, const Eigen::Vector3d& p,
                const Eigen::Vector3d& q) {
  const Eigen::Vector3d u = p - vertex;
  const Eigen::Vector3d v = q - vertex;
  const double nu = u.norm();
  const double nv = v.norm();
  if (nu == 0.0 || nv == 0.0)
    throw StructureError("zero-length edge in angle computation");
  const double c = std::clamp(u.dot(v) / (nu * nv), -1.0, 1.0);
  return std::acos(c);
}

}  // namespace

std::vector<Edge> radius_neighbors_brute(
    const std::vector<Eigen::Vector3d>& positions, double cutoff) {
  if (cutoff <= 0.0) throw DomainError("cutoff must be positive");
  const double cutoff_sq = cutoff * cutoff;
  std::vector<Edge> edges;
  for (std::size_t i = 0; i < positions.size(); ++i) {
    for (std::size_t j = 0; j < positions.size(); ++j) {
      if (j == i) continue;
      double d2 = 0.0;
      if (!within_cutoff(positions[j], positions[i], cutoff_sq, &d2)) continue;
      if (d2 == 0.0) throw_coincident(i, j);
      edges.push_back(Edge{static_cast<std::int32_t>(j),
                           static_cast<std::int32_t>(i), std::sqrt(d2)});
    }
  }
  return edges;  // already in (dst, src) order by loop structure
}

std::vector<Edge> radius_neighbors_grid(
    const std::vector<Eigen::Vector3d>& positions, double cutoff) {
  if (cutoff <= 0.0) throw DomainError("cutoff must be positive");
  const std::size_t n = positions.size();
  if (n < 2) return {};

  Eigen::Vector3d lo = positions[0];
  Eigen::Vector3d hi = positions[0];
  for (const auto& p : positions) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }

  Eigen::Vector3i dims;
  for (int k = 0; k < 3; ++k) {
    const double extent = hi[k] - lo[k];
    dims[k] = std::max(1, static_cast<int>(std::floor(extent / cutoff)) + 1);
  }
  const auto cell_of = [&](const Eigen::Vector3d& p) {
    Eigen::Vector3i c;
    for (int k = 0; k < 3; ++k) {
      c[k] = static_cast<int>(std::floor((p[k] - lo[k]) / cutoff));
      c[k] = std::clamp(c[k], 0, dims[k] - 1);
    }
    return c;
  };
  const auto flat = [&](const Eigen::Vector3i& c) {
    return (c[2] * dims[1] + c[1]) * dims[0] + c[0];
  };

  std::vector<std::vector<std::int32_t>> cells(
      static_cast<std::size_t>(dims[0]) * dims[1] * dims[2]);
  std::vector<Eigen::Vector3i> cell_index(n);
  for (std::size_t i = 0; i < n; ++i) {
    cell_index[i] = cell_of(positions[i]);
    cells[static_cast<std::size_t>(flat(cell_index[i]))].push_back(
        static_cast<std::int32_t>(i));
  }

  const double cutoff_sq = cutoff * cutoff;
  std::vector<Edge> edges;
  for (std::size_t i = 0; i < n; ++i) {
    const Eigen::Vector3i base = cell_index[i];
    for (int dz = -1; dz <= 1; ++dz) {
      for (int dy = -1; dy <= 1; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
          const Eigen::Vector3i c(base[0] + dx, base[1] + dy, base[2] + dz);
          if (c[0] < 0 || c[1] < 0 || c[2] < 0 || c[0] >= dims[0] ||
              c[1] >= dims[1] || c[2] >= dims[2])
            continue;
          for (std::int32_t j : cells[static_cast<std::size_t>(flat(c))]) {
            if (static_cast<std::size_t>(j) == i) continue;
            double d2 = 0.0;
            if (!within_cutoff(positions[static_cast<std::size_t>(j)],
                               positions[i], cutoff_sq, &d2))
              continue;
            if (d2 == 0.0) throw_coincident(i, static_cast<std::size_t>(j));
            edges.push_back(
                Edge{j, static_cast<std::int32_t>(i), std::sqrt(d2)});
          }
        }
      }
    }
  }
  canonical_sort(edges);
  return edges;
}

std::vector<AngleTriplet> enumerate_angles(
    const std::vector<Edge>& local_edges,
    const std::vector<Eigen::Vector3d>& positions) {
  const auto n = static_cast<std::int32_t>(positions.size());
  std::vector<std::vector<std::int32_t>> incoming(
      static_cast<std::size_t>(n));
  for (std::size_t e = 0; e < local_edges.size(); ++e) {
    const Edge& edge = local_edges[e];
    if (edge.src < 0 || edge.src >= n || edge.dst < 0 || edge.dst >= n)
      throw IndexError("edge " + std::to_string(e) +
                       " references node outside structure");
    incoming[static_cast<std::size_t>(edge.dst)].push_back(
        static_cast<std::int32_t>(e));
  }

  std::vector<AngleTriplet> triplets;
  for (std::size_t a = 0; a < local_edges.size(); ++a) {
    const Edge& msg = local_edges[a];
    const auto j = static_cast<std::size_t>(msg.src);
    const auto i = static_cast<std::size_t>(msg.dst);
    // One-hop companions (j' -> i), angle at vertex i.
    for (std::int32_t b : incoming[i]) {
      const Edge& comp = local_edges[static_cast<std::size_t>(b)];
      if (comp.src == msg.src) continue;
      triplets.push_back(AngleTriplet{
          AngleKind::one_hop, static_cast<std::int32_t>(a), b,
          angle_at(positions[i], positions[static_cast<std::size_t>(comp.src)],
                   positions[j])});
    }
    // Two-hop companions (k -> j), k != i, angle at vertex j.
    for (std::int32_t b : incoming[j]) {
      const Edge& comp = local_edges[static_cast<std::size_t>(b)];
      if (comp.src == msg.dst) continue;
      triplets.push_back(AngleTriplet{
          AngleKind::two_hop, static_cast<std::int32_t>(a), b,
          angle_at(positions[j], positions[static_cast<std::size_t>(comp.src)],
                   positions[i])});
    }
  }
  std::sort(triplets.begin(), triplets.end(),
            [](const AngleTriplet& x, const AngleTriplet& y) {
              return x.edge_a != y.edge_a ? x.edge_a < y.edge_a
                                          : x.edge_b < y.edge_b;
            });
  return triplets;
}

MultiplexGraph build_multiplex(const Structure& s, double local_cutoff,
                               double global_cutoff) {
  if (!(local_cutoff > 0.0) || !(local_cutoff < global_cutoff))
    throw DomainError("cutoffs must satisfy 0 < local < global");
  MultiplexGraph g;
  g.z.reserve(s.atoms.size());
  for (const Atom& a : s.atoms) g.z.push_back(a.element);

  const std::vector<Eigen::Vector3d> positions = s.positions();
  g.global_edges = radius_neighbors_grid(positions, global_cutoff);
  // The local plex is the subset of global pairs within the small cutoff;
  // distances are shared so nesting is exact.
  g.local_edges.reserve(g.global_edges.size() / 4);
  for (const Edge& e : g.global_edges) {
    if (e.distance <= local_cutoff) g.local_edges.push_back(e);
  }
  if (g.global_edges.empty() && s.atoms.size() > 1)
    std::cerr << "warning: " << (s.id.empty() ? "structure" : s.id)
              << " has no pairs within " << global_cutoff
              << " A; graph is edgeless\n";
  g.angles = enumerate_angles(g.local_edges, positions);
  return g;
}

void write_graph(std::ostream& os, const MultiplexGraph& g) {
  io::write_bytes(os, kGraphMagic, 4);
  io::write_u32(os, kGraphVersion);
  io::write_u64(os, g.z.size());
  for (int z : g.z) io::write_u32(os, static_cast<std::uint32_t>(z));
  for (const std::vector<Edge>* list : {&g.global_edges, &g.local_edges}) {
    io::write_u64(os, list->size());
    for (const Edge& e : *list) {
      io::write_u32(os, static_cast<std::uint32_t>(e.src));
      io::write_u32(os, static_cast<std::uint32_t>(e.dst));
      io::write_f64(os, e.distance);
    }
  }
  io::write_u64(os, g.angles.size());
  for (const AngleTriplet& t : g.angles) {
    io::write_u8(os, static_cast<std::uint8_t>(t.kind));
    io::write_u32(os, static_cast<std::uint32_t>(t.edge_a));
    io::write_u32(os, static_cast<std::uint32_t>(t.edge_b));
    io::write_f64(os, t.theta);
  }
}

MultiplexGraph read_graph(std::istream& is) {
  char magic[4];
  io::read_bytes(is, magic, 4, "graph magic");
  if (!std::equal(magic, magic + 4, kGraphMagic))
    throw IoError("not a graph cache file (bad magic)");
  const std::uint32_t version = io::read_u32(is, "graph version");
  if (version != kGraphVersion)
    throw IoError("unsupported graph cache version " +
                  std::to_string(version));
  MultiplexGraph g;
  const std::uint64_t n = io::read_u64(is, "node count");
  g.z.resize(n);
  for (auto& z : g.z) z = static_cast<int>(io::read_u32(is, "z"));
  for (std::vector<Edge>* list : {&g.global_edges, &g.local_edges}) {
    const std::uint64_t m = io::read_u64(is, "edge count");
    list->resize(m);
    for (Edge& e : *list) {
      e.src = static_cast<std::int32_t>(io::read_u32(is, "edge src"));
      e.dst = static_cast<std::int32_t>(io::read_u32(is, "edge dst"));
      e.distance = io::read_f64(is, "edge distance");
      if (e.src < 0 || e.dst < 0 || static_cast<std::uint64_t>(e.src) >= n ||
          static_cast<std::uint64_t>(e.dst) >= n)
        throw IoError("graph cache edge references node outside structure");
    }
  }
  const std::uint64_t k = io::read_u64(is, "triplet count");
  g.angles.resize(k);
  for (AngleTriplet& t : g.angles) {
    const std::uint8_t kind = io::read_u8(is, "triplet kind");
    if (kind > 1) throw IoError("graph cache triplet has bad kind");
    t.kind = static_cast<AngleKind>(kind);
    t.edge_a = static_cast<std::int32_t>(io::read_u32(is, "triplet edge_a"));
    t.edge_b = static_cast<std::int32_t>(io::read_u32(is, "triplet edge_b"));
    t.theta = io::read_f64(is, "triplet theta");
    if (static_cast<std::size_t>(t.edge_a) >= g.local_edges.size() ||
        static_cast<std::size_t>(t.edge_b) >= g.local_edges.size() ||
        t.edge_a < 0 || t.edge_b < 0)
      throw IoError("graph cache triplet references missing local edge");
  }
  io::expect_end(is, "graph cache");
  return g;
}

void write_graph_file(const std::string& path, const MultiplexGraph& g) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open file for writing: " + path);
  write_graph(out, g);
}

MultiplexGraph read_graph_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open graph cache: " + path);
  return read_graph(in);
}

}  // namespace paxnet
