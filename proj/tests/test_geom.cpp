// Copyright 2026 PaxNet contributors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <cstdio>

#include "paxnet/error.hpp"
#include "paxnet/geom.hpp"
#include "paxnet/rng.hpp"
#include "synthetic.hpp"

using namespace paxnet;

namespace {

// Independent oracle: brute-force search over rotations of centered
// coordinates. The optimal translation aligns centroids, so only rotations
// need sampling. Returns an upper bound that tightens with grid resolution.
double rmsd_rotation_grid(const std::vector<Eigen::Vector3d>& a,
                          const std::vector<Eigen::Vector3d>& b,
                          int steps = 48) {
  Eigen::Vector3d ca = Eigen::Vector3d::Zero(), cb = Eigen::Vector3d::Zero();
  for (const auto& p : a) ca += p;
  for (const auto& p : b) cb += p;
  ca /= static_cast<double>(a.size());
  cb /= static_cast<double>(b.size());

  double best = std::numeric_limits<double>::infinity();
  for (int ia = 0; ia < steps; ++ia) {
    for (int ib = 0; ib <= steps / 2; ++ib) {
      for (int ig = 0; ig < steps; ++ig) {
        const Eigen::Matrix3d rot = test::rotation_zyz(
            2.0 * M_PI * ia / steps, M_PI * ib / (steps / 2),
            2.0 * M_PI * ig / steps);
        double ss = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i)
          ss += (a[i] - ca - rot * (b[i] - cb)).squaredNorm();
        best = std::min(best, std::sqrt(ss / static_cast<double>(a.size())));
      }
    }
  }
  return best;
}

}  // namespace

TEST_CASE("xyz parsing transcribes atoms in order") {
  const Structure s =
      parse_structure("2\nC 0 0 0\nO 1.5 0 0", StructureFormat::xyz);
  REQUIRE(s.atoms.size() == 2);
  CHECK(s.atoms[0].element == 6);
  CHECK(s.atoms[1].element == 8);
  CHECK(s.atoms[0].position == Eigen::Vector3d(0, 0, 0));
  CHECK(s.atoms[1].position == Eigen::Vector3d(1.5, 0, 0));
}

TEST_CASE("xyz parse errors carry line numbers") {
  // Garbled coordinate on line 7 of a 6-atom file.
  const std::string text =
      "6\nC 0 0 0\nC 1 0 0\nC 2 0 0\nC 3 0 0\nC 4 0 0\nC 5 0 zz\n";
  try {
    parse_structure(text, StructureFormat::xyz);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line_number == 7);
    CHECK(std::string(e.what()).find("line 7") != std::string::npos);
  }

  CHECK_THROWS_AS(parse_structure("", StructureFormat::xyz), StructureError);
  CHECK_THROWS_AS(parse_structure("abc\n", StructureFormat::xyz), ParseError);
  CHECK_THROWS_AS(parse_structure("3\nC 0 0 0\nC 1 0 0\n",
                                  StructureFormat::xyz),
                  ParseError);
  CHECK_THROWS_AS(parse_structure("2\nC 0 0 0\nC 1 0 0 extra\n",
                                  StructureFormat::xyz),
                  ParseError);
  CHECK_THROWS_AS(parse_structure("2\nQq 0 0 0\nC 1 0 0\n",
                                  StructureFormat::xyz),
                  ParseError);
}

TEST_CASE("xyz round-trip preserves atom order and coordinates") {
  const Structure s = test::random_cloud(17, 12.0, 99);
  const Structure back =
      parse_structure(write_xyz(s), StructureFormat::xyz, s.id);
  REQUIRE(back.atoms.size() == s.atoms.size());
  for (std::size_t i = 0; i < s.atoms.size(); ++i) {
    CHECK(back.atoms[i].element == s.atoms[i].element);
    CHECK(back.atoms[i].position == s.atoms[i].position);  // bit-exact
  }
}

namespace {

// Column-exact ATOM/HETATM record per PDB format v3.3.
std::string pdb_line(const char* record, int serial, const char* name,
                     char alt_loc, double x, double y, double z,
                     const char* element) {
  char buf[128];
  std::snprintf(buf, sizeof buf,
                "%-6s%5d %-4s%c%-3s %c%4d%c   %8.3f%8.3f%8.3f%6.2f%6.2f"
                "          %2s\n",
                record, serial, name, alt_loc, "G", 'A', 1, ' ', x, y, z, 1.0,
                0.0, element);
  return buf;
}

}  // namespace

TEST_CASE("PDB fixed-column records parse") {
  // The canonical layout, element in columns 77-78.
  const std::string text =
      pdb_line("ATOM", 1, " P", ' ', 10.0, 20.0, 30.0, " P") +
      pdb_line("ATOM", 2, " C1'", ' ', 11.0, 21.0, 31.0, " C");
  const Structure s = parse_structure(text, StructureFormat::pdb);
  REQUIRE(s.atoms.size() == 2);
  CHECK(s.atoms[0].element == 15);
  CHECK(s.atoms[0].position == Eigen::Vector3d(10, 20, 30));
  CHECK(s.atoms[1].element == 6);

  // Spec-width line without the optional trailing fields.
  const Structure t = parse_structure(
      "ATOM      1  P     G A   1      10.000  20.000  30.000  1.00  0.00   "
      "        P\n" +
          pdb_line("ATOM", 2, " O5'", ' ', 1.0, 1.0, 1.0, " O"),
      StructureFormat::pdb);
  CHECK(t.atoms[0].element == 15);
  CHECK(t.atoms[0].position == Eigen::Vector3d(10, 20, 30));
}

TEST_CASE("PDB element falls back to the atom-name field") {
  // Element columns blank: one-letter elements sit at column 14, two-letter
  // ones start at column 13.
  const std::string text =
      pdb_line("ATOM", 1, " O5'", ' ', 1.0, 2.0, 3.0, "") +
      pdb_line("ATOM", 2, "1H5'", ' ', 2.0, 2.0, 3.0, "") +
      pdb_line("HETATM", 3, "FE", ' ', 3.0, 2.0, 3.0, "");
  const Structure s = parse_structure(text, StructureFormat::pdb);
  REQUIRE(s.atoms.size() == 3);
  CHECK(s.atoms[0].element == 8);
  CHECK(s.atoms[1].element == 1);
  CHECK(s.atoms[2].element == 26);
}

TEST_CASE("PDB altLoc keeps blank or A only") {
  const std::string text =
      pdb_line("ATOM", 1, " C1'", 'A', 1.0, 2.0, 3.0, " C") +
      pdb_line("ATOM", 2, " C1'", 'B', 9.0, 9.0, 9.0, " C") +
      pdb_line("ATOM", 3, " O5'", ' ', 2.0, 2.0, 3.0, " O");
  const Structure s = parse_structure(text, StructureFormat::pdb);
  REQUIRE(s.atoms.size() == 2);
  CHECK(s.atoms[0].position.x() == 1.0);
  CHECK(s.atoms[1].element == 8);
}

TEST_CASE("PDB keeps only the first model") {
  const std::string text =
      "MODEL     1\n" + pdb_line("ATOM", 1, " C1'", ' ', 1.0, 2.0, 3.0, " C") +
      pdb_line("ATOM", 2, " O5'", ' ', 2.0, 2.0, 3.0, " O") + "ENDMDL\n" +
      "MODEL     2\n" + pdb_line("ATOM", 3, " C1'", ' ', 9.0, 9.0, 9.0, " C") +
      "ENDMDL\n";
  const Structure s = parse_structure(text, StructureFormat::pdb);
  REQUIRE(s.atoms.size() == 2);
  CHECK(s.atoms[0].position.x() == 1.0);
}

TEST_CASE("PDB coordinate errors carry line numbers") {
  std::string bad = pdb_line("ATOM", 1, " C1'", ' ', 1.0, 2.0, 3.0, " C");
  bad.replace(38, 8, "   x.000");  // y field
  const std::string text =
      pdb_line("ATOM", 1, " O5'", ' ', 1.0, 2.0, 3.0, " O") + bad;
  try {
    parse_structure(text, StructureFormat::pdb);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line_number == 2);
  }
}

TEST_CASE("filter keeps C, N, O in order") {
  Structure s;
  s.atoms = {Atom{6, {0, 0, 0}}, Atom{1, {1, 0, 0}}, Atom{8, {2, 0, 0}},
             Atom{15, {3, 0, 0}}, Atom{7, {4, 0, 0}}};
  const Structure f = filter_heavy_cno(s);
  REQUIRE(f.atoms.size() == 3);
  CHECK(f.atoms[0].element == 6);
  CHECK(f.atoms[1].element == 8);
  CHECK(f.atoms[2].element == 7);

  // Identity on already-filtered input, and idempotent.
  Structure cc;
  cc.atoms = {Atom{6, {0, 0, 0}}, Atom{6, {1, 0, 0}}};
  CHECK(filter_heavy_cno(cc).atoms.size() == 2);
  const Structure twice = filter_heavy_cno(filter_heavy_cno(s));
  CHECK(twice.atoms.size() == f.atoms.size());

  Structure hp;
  hp.atoms = {Atom{1, {0, 0, 0}}, Atom{15, {1, 0, 0}}};
  CHECK_THROWS_AS(filter_heavy_cno(hp), StructureError);
}

TEST_CASE("RMSD of identical structures is zero") {
  const Structure s = test::random_folded_chain(20, 7);
  CHECK(kabsch_rmsd(s, s) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("RMSD is invariant to rigid motions") {
  const Structure s = test::random_folded_chain(25, 11);
  const Structure moved =
      test::rigid_motion(s, M_PI / 2.0, 0.0, 0.0, {5.0, 5.0, 5.0});
  CHECK(kabsch_rmsd(s, moved) < 1e-9);

  Rng rng(3);
  for (int trial = 0; trial < 10; ++trial) {
    const Structure m = test::rigid_motion(
        s, rng.uniform(0, 2 * M_PI), rng.uniform(0, M_PI),
        rng.uniform(0, 2 * M_PI),
        {rng.uniform(-20, 20), rng.uniform(-20, 20), rng.uniform(-20, 20)});
    CHECK(kabsch_rmsd(s, m) < 1e-9);
  }
}

TEST_CASE("RMSD matches the rotation-grid oracle") {
  // Hand case: {(0,0,0),(2,0,0)} vs {(0,0,0),(4,0,0)} -> exactly 1.
  const std::vector<Eigen::Vector3d> a{{0, 0, 0}, {2, 0, 0}};
  const std::vector<Eigen::Vector3d> b{{0, 0, 0}, {4, 0, 0}};
  CHECK(kabsch_rmsd(a, b) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(rmsd_rotation_grid(a, b) == doctest::Approx(1.0).epsilon(1e-3));

  Rng rng(17);
  for (int trial = 0; trial < 4; ++trial) {
    std::vector<Eigen::Vector3d> pa, pb;
    for (int i = 0; i < 5; ++i) {
      pa.emplace_back(rng.uniform(-3, 3), rng.uniform(-3, 3),
                      rng.uniform(-3, 3));
      pb.emplace_back(rng.uniform(-3, 3), rng.uniform(-3, 3),
                      rng.uniform(-3, 3));
    }
    const double exact = kabsch_rmsd(pa, pb);
    const double grid = rmsd_rotation_grid(pa, pb);
    CHECK(exact <= grid + 1e-9);     // true minimum never beats the samples
    CHECK(grid - exact < 0.25);      // and the grid gets close
  }
}

TEST_CASE("RMSD is symmetric and permutation-invariant") {
  Rng rng(23);
  const Structure sa = test::random_folded_chain(15, 5);
  const Structure sb = test::random_folded_chain(15, 6);
  CHECK(kabsch_rmsd(sa, sb) ==
        doctest::Approx(kabsch_rmsd(sb, sa)).epsilon(1e-9));

  std::vector<std::size_t> perm(sa.atoms.size());
  for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = i;
  rng.shuffle(perm);
  Structure pa = sa, pb = sb;
  for (std::size_t i = 0; i < perm.size(); ++i) {
    pa.atoms[i] = sa.atoms[perm[i]];
    pb.atoms[i] = sb.atoms[perm[i]];
  }
  CHECK(kabsch_rmsd(pa, pb) ==
        doctest::Approx(kabsch_rmsd(sa, sb)).epsilon(1e-9));
}

TEST_CASE("RMSD requires matching atom counts") {
  const std::vector<Eigen::Vector3d> a{{0, 0, 0}, {1, 0, 0}};
  const std::vector<Eigen::Vector3d> b{{0, 0, 0}, {1, 0, 0}, {2, 0, 0}};
  CHECK_THROWS_AS(kabsch_rmsd(a, b), StructureError);
}

TEST_CASE("reflections are not allowed in superposition") {
  // A chiral 4-point set vs its mirror image: RMSD must stay positive.
  const std::vector<Eigen::Vector3d> a{
      {0, 0, 0}, {1, 0, 0}, {0, 1.3, 0}, {0, 0, 1.7}};
  std::vector<Eigen::Vector3d> b = a;
  for (auto& p : b) p.z() = -p.z();
  CHECK(kabsch_rmsd(a, b) > 0.1);
}
