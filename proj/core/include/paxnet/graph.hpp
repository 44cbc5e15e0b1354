// Copyright 2026 PaxNet contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "paxnet/geom.hpp"

namespace paxnet {

// Directed edge src -> dst with its pairwise distance. Both orientations of
// every pair within the cutoff are stored, since messages flow per directed
// edge.
struct Edge {
  std::int32_t src = 0;
  std::int32_t dst = 0;
  double distance = 0.0;
};

enum class AngleKind : std::uint8_t { one_hop = 0, two_hop = 1 };

// Angle between a message edge (j -> i) and a companion edge sharing one
// endpoint: (j' -> i) measured at i for one_hop, (k -> j) measured at j for
// two_hop. Indices refer to the local edge list.
struct AngleTriplet {
  AngleKind kind = AngleKind::one_hop;
  std::int32_t edge_a = 0;  // message edge
  std::int32_t edge_b = 0;  // companion edge
  double theta = 0.0;       // radians in [0, pi]
};

// Two-plex graph over one node set: a dense "global" plex (large cutoff) and
// a sparse "local" plex (small cutoff) with its angle triplets.
struct MultiplexGraph {
  std::vector<int> z;
  std::vector<Edge> global_edges;
  std::vector<Edge> local_edges;
  std::vector<AngleTriplet> angles;

  std::size_t num_nodes() const { return z.size(); }
};

// All ordered pairs (src, dst), src != dst, with 0 < distance <= cutoff
// (inclusive boundary). Returned in canonical (dst, src) order. Coincident
// atoms raise StructureError. O(n^2) reference implementation.
std::vector<Edge> radius_neighbors_brute(
    const std::vector<Eigen::Vector3d>& positions, double cutoff);

// Same pair set via a uniform spatial grid with cell size = cutoff; canonical
// (dst, src) order restored before returning.
std::vector<Edge> radius_neighbors_grid(
    const std::vector<Eigen::Vector3d>& positions, double cutoff);

// For every directed message edge (j -> i): pairs it with every other
// incoming edge (j' -> i) at vertex i (one_hop) and with every incoming edge
// (k -> j), k != i, at vertex j (two_hop). Sorted by (edge_a, edge_b).
std::vector<AngleTriplet> enumerate_angles(
    const std::vector<Edge>& local_edges,
    const std::vector<Eigen::Vector3d>& positions);

// Builds the full two-plex graph from an already C/N/O-filtered structure.
// Requires 0 < local_cutoff < global_cutoff. A structure with zero global
// edges yields a warning on stderr, not an error.
MultiplexGraph build_multiplex(const Structure& s, double local_cutoff,
                               double global_cutoff);

// Versioned little-endian binary cache format.
void write_graph(std::ostream& os, const MultiplexGraph& g);
MultiplexGraph read_graph(std::istream& is);
void write_graph_file(const std::string& path, const MultiplexGraph& g);
MultiplexGraph read_graph_file(const std::string& path);

}  // namespace paxnet
