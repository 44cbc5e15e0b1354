// Copyright 2026 PaxNet contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Core>
#include <string>
#include <vector>

namespace paxnet {

// One heavy atom: atomic number plus Cartesian position in Angstrom.
struct Atom {
  int element = 0;
  Eigen::Vector3d position{0.0, 0.0, 0.0};
};

struct Structure {
  std::string id;
  std::vector<Atom> atoms;

  std::vector<Eigen::Vector3d> positions() const {
    std::vector<Eigen::Vector3d> p;
    p.reserve(atoms.size());
    for (const Atom& a : atoms) p.push_back(a.position);
    return p;
  }
};

enum class StructureFormat { pdb, xyz };

// Atomic number for an element symbol ("C", "FE", "Fe"); 0 if unknown.
int element_from_symbol(const std::string& symbol);
const std::string& symbol_from_element(int z);

// Parses fixed-column PDB text (ATOM/HETATM records, first model only,
// altLoc blank or 'A') or xyz text ("count" line followed by one
// "SYMBOL x y z" line per atom). All elements are kept; filtering is a
// separate step. Throws ParseError with a line number on malformed input and
// StructureError when fewer than two atoms result.
Structure parse_structure(const std::string& text, StructureFormat format,
                          const std::string& id = "");

// Reads a structure from disk; ".xyz" extension selects the xyz reader,
// anything else is treated as PDB.
Structure read_structure_file(const std::string& path);

std::string write_xyz(const Structure& s);
void write_xyz_file(const std::string& path, const Structure& s);

// Keeps carbon, nitrogen and oxygen atoms, preserving order. Throws
// StructureError if fewer than two atoms remain. Idempotent.
Structure filter_heavy_cno(const Structure& s);

// Minimum RMSD over proper rigid motions (rotation + translation, no
// reflection) applied to b. Requires equal atom counts with positional
// correspondence.
double kabsch_rmsd(const Structure& a, const Structure& b);
double kabsch_rmsd(const std::vector<Eigen::Vector3d>& a,
                   const std::vector<Eigen::Vector3d>& b);

}  // namespace paxnet
