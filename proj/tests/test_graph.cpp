// Copyright 2026 PaxNet contributors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "paxnet/error.hpp"
#include "paxnet/graph.hpp"
#include "paxnet/rng.hpp"
#include "synthetic.hpp"

using namespace paxnet;

namespace {

std::set<std::pair<int, int>> pair_set(const std::vector<Edge>& edges) {
  std::set<std::pair<int, int>> out;
  for (const Edge& e : edges) out.emplace(e.src, e.dst);
  return out;
}

// Triple-loop oracle: every ordered (message edge, companion edge) pair that
// shares the required endpoint.
std::vector<AngleTriplet> angle_oracle(
    const std::vector<Edge>& edges,
    const std::vector<Eigen::Vector3d>& pos) {
  std::vector<AngleTriplet> out;
  const auto angle = [&](int vertex, int p, int q) {
    const Eigen::Vector3d u =
        pos[static_cast<std::size_t>(p)] - pos[static_cast<std::size_t>(vertex)];
    const Eigen::Vector3d v =
        pos[static_cast<std::size_t>(q)] - pos[static_cast<std::size_t>(vertex)];
    return std::acos(std::clamp(u.dot(v) / (u.norm() * v.norm()), -1.0, 1.0));
  };
  for (std::size_t a = 0; a < edges.size(); ++a) {
    for (std::size_t b = 0; b < edges.size(); ++b) {
      if (a == b) continue;
      const Edge& msg = edges[a];
      const Edge& comp = edges[b];
      if (comp.dst == msg.dst && comp.src != msg.src) {
        out.push_back(AngleTriplet{AngleKind::one_hop,
                                   static_cast<std::int32_t>(a),
                                   static_cast<std::int32_t>(b),
                                   angle(msg.dst, comp.src, msg.src)});
      }
      if (comp.dst == msg.src && comp.src != msg.dst) {
        out.push_back(AngleTriplet{AngleKind::two_hop,
                                   static_cast<std::int32_t>(a),
                                   static_cast<std::int32_t>(b),
                                   angle(msg.src, comp.src, msg.dst)});
      }
    }
  }
  std::sort(out.begin(), out.end(),
            [](const AngleTriplet& x, const AngleTriplet& y) {
              return x.edge_a != y.edge_a ? x.edge_a < y.edge_a
                                          : x.edge_b < y.edge_b;
            });
  return out;
}

}  // namespace

TEST_CASE("brute-force neighbor search basics") {
  std::vector<Eigen::Vector3d> two{{0, 0, 0}, {3, 0, 0}};
  CHECK(radius_neighbors_brute(two, 2.6).empty());

  // Inclusive boundary: distance exactly at the cutoff keeps the pair.
  std::vector<Eigen::Vector3d> touch{{0, 0, 0}, {2.6, 0, 0}};
  const auto edges = radius_neighbors_brute(touch, 2.6);
  REQUIRE(edges.size() == 2);
  CHECK(pair_set(edges) ==
        std::set<std::pair<int, int>>{{0, 1}, {1, 0}});
  CHECK(edges[0].distance == doctest::Approx(2.6));

  // Unit square: 8 directed side edges; sqrt(2) diagonals excluded.
  std::vector<Eigen::Vector3d> square{
      {0, 0, 0}, {1, 0, 0}, {1, 1, 0}, {0, 1, 0}};
  CHECK(radius_neighbors_brute(square, 1.0).size() == 8);

  CHECK_THROWS_AS(radius_neighbors_brute(two, 0.0), DomainError);
  std::vector<Eigen::Vector3d> dup{{1, 1, 1}, {1, 1, 1}};
  CHECK_THROWS_AS(radius_neighbors_brute(dup, 2.0), StructureError);
  CHECK_THROWS_AS(radius_neighbors_grid(dup, 2.0), StructureError);
}

TEST_CASE("grid search equals brute force on random clouds") {
  CHECK(radius_neighbors_grid({{1, 2, 3}}, 2.0).empty());

  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto points = test::random_points(50, 9.0, seed + 1000);
    const auto brute = radius_neighbors_brute(points, 2.6);
    const auto grid = radius_neighbors_grid(points, 2.6);
    REQUIRE(brute.size() == grid.size());
    for (std::size_t i = 0; i < brute.size(); ++i) {
      CHECK(brute[i].src == grid[i].src);
      CHECK(brute[i].dst == grid[i].dst);
      CHECK(brute[i].distance == grid[i].distance);  // identical arithmetic
    }
  }
}

TEST_CASE("grid search equals brute force on a large box") {
  const auto points = test::random_points(1000, 50.0, 42);
  const auto brute = radius_neighbors_brute(points, 2.6);
  const auto grid = radius_neighbors_grid(points, 2.6);
  REQUIRE(brute.size() == grid.size());
  for (std::size_t i = 0; i < brute.size(); ++i) {
    CHECK(brute[i].src == grid[i].src);
    CHECK(brute[i].dst == grid[i].dst);
  }
}

TEST_CASE("angle enumeration on a collinear chain") {
  const std::vector<Eigen::Vector3d> pos{{0, 0, 0}, {1.5, 0, 0}, {3.0, 0, 0}};
  const auto edges = radius_neighbors_brute(pos, 2.0);  // a-b, b-c only
  REQUIRE(edges.size() == 4);
  const auto triplets = enumerate_angles(edges, pos);
  // Each direction of each edge gets exactly one companion here.
  REQUIRE(triplets.size() == 4);

  // Message edge (b->a) has a two-hop companion (c->b) with theta = pi.
  bool found = false;
  for (const AngleTriplet& t : triplets) {
    const Edge& msg = edges[static_cast<std::size_t>(t.edge_a)];
    const Edge& comp = edges[static_cast<std::size_t>(t.edge_b)];
    if (msg.src == 1 && msg.dst == 0 && comp.src == 2 && comp.dst == 1) {
      CHECK(t.kind == AngleKind::two_hop);
      CHECK(t.theta == doctest::Approx(M_PI).epsilon(1e-12));
      found = true;
    }
  }
  CHECK(found);
}

TEST_CASE("angle enumeration on an equilateral triangle") {
  const double s = 1.0;
  const std::vector<Eigen::Vector3d> pos{
      {0, 0, 0}, {s, 0, 0}, {s / 2, s * std::sqrt(3.0) / 2.0, 0}};
  const auto edges = radius_neighbors_brute(pos, 1.1);
  REQUIRE(edges.size() == 6);
  const auto triplets = enumerate_angles(edges, pos);
  for (const AngleTriplet& t : triplets) {
    if (t.kind == AngleKind::one_hop)
      CHECK(t.theta == doctest::Approx(M_PI / 3.0).epsilon(1e-12));
  }
  const auto oracle = angle_oracle(edges, pos);
  CHECK(triplets.size() == oracle.size());
}

TEST_CASE("angle enumeration on a star graph") {
  // Center node 0 with 4 leaves; only center-leaf edges are local.
  std::vector<Eigen::Vector3d> pos{
      {0, 0, 0}, {1.2, 0, 0}, {0, 1.2, 0}, {-1.2, 0, 0}, {0, 0, 1.2}};
  const auto edges = radius_neighbors_brute(pos, 1.3);
  REQUIRE(edges.size() == 8);
  const auto triplets = enumerate_angles(edges, pos);

  for (std::size_t a = 0; a < edges.size(); ++a) {
    const Edge& msg = edges[a];
    std::size_t one_hop = 0, two_hop = 0;
    for (const AngleTriplet& t : triplets) {
      if (t.edge_a != static_cast<std::int32_t>(a)) continue;
      (t.kind == AngleKind::one_hop ? one_hop : two_hop) += 1;
    }
    if (msg.dst == 0) {  // leaf -> center: 3 one-hop companions at the center
      CHECK(one_hop == 3);
      CHECK(two_hop == 0);
    } else {  // center -> leaf: no other edges into the leaf, 3 at the center
      CHECK(one_hop == 0);
      CHECK(two_hop == 3);
    }
  }
  CHECK(triplets.size() == angle_oracle(edges, pos).size());
}

TEST_CASE("angle enumeration matches the triple-loop oracle") {
  for (std::uint64_t seed = 0; seed < 25; ++seed) {
    const auto points = test::random_points(12, 4.0, seed + 77);
    const auto edges = radius_neighbors_brute(points, 2.0);
    const auto got = enumerate_angles(edges, points);
    const auto want = angle_oracle(edges, points);
    REQUIRE(got.size() == want.size());
    for (std::size_t i = 0; i < got.size(); ++i) {
      CHECK(got[i].kind == want[i].kind);
      CHECK(got[i].edge_a == want[i].edge_a);
      CHECK(got[i].edge_b == want[i].edge_b);
      CHECK(std::abs(got[i].theta - want[i].theta) < 1e-12);
    }
  }
}

TEST_CASE("angles reject dangling edge references") {
  const std::vector<Eigen::Vector3d> pos{{0, 0, 0}, {1, 0, 0}};
  CHECK_THROWS_AS(enumerate_angles({Edge{0, 5, 1.0}}, pos), IndexError);
}

TEST_CASE("multiplex build nests the local plex inside the global plex") {
  Structure s;
  s.atoms = {Atom{6, {0, 0, 0}}, Atom{8, {5, 0, 0}}};
  const MultiplexGraph between = build_multiplex(s, 2.6, 20.0);
  CHECK(between.global_edges.size() == 2);
  CHECK(between.local_edges.empty());
  CHECK(between.angles.empty());
  CHECK(between.z == std::vector<int>{6, 8});

  s.atoms[1].position = {1.4, 0, 0};
  const MultiplexGraph close = build_multiplex(s, 2.6, 20.0);
  CHECK(close.local_edges.size() == 2);

  const Structure cloud = test::random_cloud(20, 7.0, 5);
  const MultiplexGraph g = build_multiplex(cloud, 2.6, 20.0);
  const auto globals = pair_set(g.global_edges);
  for (const Edge& e : g.local_edges) {
    CHECK(globals.count({e.src, e.dst}) == 1);
    CHECK(e.distance <= 2.6);
  }
  const auto direct = radius_neighbors_brute(cloud.positions(), 2.6);
  CHECK(pair_set(g.local_edges) == pair_set(direct));
  CHECK(g.angles.size() ==
        angle_oracle(g.local_edges, cloud.positions()).size());

  CHECK_THROWS_AS(build_multiplex(s, 20.0, 2.6), DomainError);
}

TEST_CASE("edge multiset is invariant under rigid motion") {
  const Structure s = test::random_cloud(30, 8.0, 13);
  const Structure moved =
      test::rigid_motion(s, 0.7, 1.1, -0.4, {3.0, -2.0, 9.0});
  const MultiplexGraph a = build_multiplex(s, 2.6, 20.0);
  const MultiplexGraph b = build_multiplex(moved, 2.6, 20.0);

  REQUIRE(a.global_edges.size() == b.global_edges.size());
  REQUIRE(a.local_edges.size() == b.local_edges.size());
  REQUIRE(a.angles.size() == b.angles.size());

  std::vector<double> da, db;
  for (const Edge& e : a.global_edges) da.push_back(e.distance);
  for (const Edge& e : b.global_edges) db.push_back(e.distance);
  std::sort(da.begin(), da.end());
  std::sort(db.begin(), db.end());
  for (std::size_t i = 0; i < da.size(); ++i)
    CHECK(std::abs(da[i] - db[i]) < 1e-9);

  std::vector<double> ta, tb;
  for (const AngleTriplet& t : a.angles) ta.push_back(t.theta);
  for (const AngleTriplet& t : b.angles) tb.push_back(t.theta);
  std::sort(ta.begin(), ta.end());
  std::sort(tb.begin(), tb.end());
  for (std::size_t i = 0; i < ta.size(); ++i)
    CHECK(std::abs(ta[i] - tb[i]) < 1e-9);
}

TEST_CASE("permuting atoms yields an isomorphic graph") {
  const Structure s = test::random_cloud(15, 6.0, 21);
  std::vector<std::int32_t> perm(s.atoms.size());
  for (std::size_t i = 0; i < perm.size(); ++i)
    perm[i] = static_cast<std::int32_t>(i);
  Rng rng(2);
  rng.shuffle(perm);
  Structure p;
  p.atoms.resize(s.atoms.size());
  for (std::size_t i = 0; i < perm.size(); ++i)
    p.atoms[static_cast<std::size_t>(perm[i])] = s.atoms[i];

  const MultiplexGraph a = build_multiplex(s, 2.6, 20.0);
  const MultiplexGraph b = build_multiplex(p, 2.6, 20.0);
  std::set<std::pair<int, int>> mapped;
  for (const Edge& e : a.local_edges)
    mapped.emplace(perm[static_cast<std::size_t>(e.src)],
                   perm[static_cast<std::size_t>(e.dst)]);
  CHECK(mapped == pair_set(b.local_edges));
  for (std::size_t i = 0; i < s.atoms.size(); ++i)
    CHECK(a.z[i] == b.z[static_cast<std::size_t>(
                        perm[i])]);
}

TEST_CASE("triplet angles lie in [0, pi] and distances recompute") {
  const Structure s = test::random_cloud(25, 6.0, 31);
  const auto positions = s.positions();
  const MultiplexGraph g = build_multiplex(s, 2.6, 20.0);
  for (const AngleTriplet& t : g.angles) {
    CHECK(t.theta >= 0.0);
    CHECK(t.theta <= M_PI);
  }
  for (const Edge& e : g.global_edges) {
    const double d = (positions[static_cast<std::size_t>(e.src)] -
                      positions[static_cast<std::size_t>(e.dst)])
                         .norm();
    CHECK(std::abs(d - e.distance) < 1e-12);
  }
}

TEST_CASE("graph cache round-trips bit-exactly") {
  const Structure s = test::random_cloud(18, 6.0, 3);
  const MultiplexGraph g = build_multiplex(s, 2.6, 20.0);
  std::stringstream buf;
  write_graph(buf, g);
  const MultiplexGraph back = read_graph(buf);
  CHECK(back.z == g.z);
  REQUIRE(back.global_edges.size() == g.global_edges.size());
  REQUIRE(back.local_edges.size() == g.local_edges.size());
  REQUIRE(back.angles.size() == g.angles.size());
  for (std::size_t i = 0; i < g.global_edges.size(); ++i) {
    CHECK(back.global_edges[i].src == g.global_edges[i].src);
    CHECK(back.global_edges[i].dst == g.global_edges[i].dst);
    CHECK(back.global_edges[i].distance == g.global_edges[i].distance);
  }
  for (std::size_t i = 0; i < g.angles.size(); ++i) {
    CHECK(back.angles[i].kind == g.angles[i].kind);
    CHECK(back.angles[i].edge_a == g.angles[i].edge_a);
    CHECK(back.angles[i].edge_b == g.angles[i].edge_b);
    CHECK(back.angles[i].theta == g.angles[i].theta);
  }

  // Corruption paths.
  std::stringstream trunc(buf.str().substr(0, 20));
  CHECK_THROWS_AS(read_graph(trunc), IoError);
  std::stringstream bad("NOPEnope");
  CHECK_THROWS_AS(read_graph(bad), IoError);
}
