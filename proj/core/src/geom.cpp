// Copyright 2026 PaxNet contributors
// SPDX-License-Identifier: Apache-2.0

#include "paxnet/geom.hpp"

#include <Eigen/Dense>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <unordered_map>

#include "paxnet/error.hpp"

namespace paxnet {

namespace {

const std::vector<std::string> kSymbols = {
    "X",  "H",  "He", "Li", "Be", "B",  "C",  "N",  "O",  "F",  "Ne", "Na",
    "Mg", "Al", "Si", "P",  "S",  "Cl", "Ar", "K",  "Ca", "Sc", "Ti", "V",
    "Cr", "Mn", "Fe", "Co", "Ni", "Cu", "Zn", "Ga", "Ge", "As", "Se", "Br",
    "Kr"};

std::string normalize_symbol(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (std::isalpha(static_cast<unsigned char>(c))) out.push_back(c);
  }
  if (out.empty()) return out;
  out[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(out[0])));
  for (std::size_t i = 1; i < out.size(); ++i)
    out[i] = static_cast<char>(std::tolower(static_cast<unsigned char>(out[i])));
  return out;
}

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

bool parse_double_strict(const std::string& field, double* out) {
  const std::string t = trim(field);
  if (t.empty()) return false;
  try {
    std::size_t pos = 0;
    *out = std::stod(t, &pos);
    return pos == t.size();
  } catch (const std::exception&) {
    return false;
  }
}

std::string column(const std::string& line, std::size_t start, std::size_t len) {
  if (start >= line.size()) return "";
  return line.substr(start, std::min(len, line.size() - start));
}

// Element of a PDB ATOM record. Columns 77-78 when present; otherwise the
// atom-name field (columns 13-16): two-letter elements are left-justified at
// column 13, one-letter elements leave column 13 blank or numeric.
int pdb_element(const std::string& line, long line_no) {
  const std::string explicit_sym = normalize_symbol(column(line, 76, 2));
  if (!explicit_sym.empty()) {
    const int z = element_from_symbol(explicit_sym);
    if (z == 0)
      throw ParseError("unknown element symbol '" + explicit_sym + "'", line_no);
    return z;
  }
  const std::string name = column(line, 12, 4);
  if (name.size() >= 2 && std::isalpha(static_cast<unsigned char>(name[0]))) {
    const int z = element_from_symbol(normalize_symbol(name.substr(0, 2)));
    if (z != 0) return z;
  }
  for (char c : name) {
    if (std::isalpha(static_cast<unsigned char>(c))) {
      const int z = element_from_symbol(std::string(1, c));
      if (z != 0) return z;
      break;
    }
  }
  throw ParseError("cannot determine element from atom name '" + name + "'",
                   line_no);
}

Structure parse_pdb(const std::string& text, const std::string& id) {
  Structure s;
  s.id = id;
  std::istringstream in(text);
  std::string line;
  long line_no = 0;
  bool first_model_done = false;
  bool warned_extra_models = false;
  while (std::getline(in, line)) {
    ++line_no;
    const bool is_atom =
        line.rfind("ATOM", 0) == 0 || line.rfind("HETATM", 0) == 0;
    if (line.rfind("ENDMDL", 0) == 0) {
      first_model_done = true;
      continue;
    }
    if (first_model_done) {
      if ((is_atom || line.rfind("MODEL", 0) == 0) && !warned_extra_models) {
        std::cerr << "warning: " << (id.empty() ? "structure" : id)
                  << " contains multiple models; using the first\n";
        warned_extra_models = true;
      }
      continue;
    }
    if (!is_atom) continue;
    if (line.size() < 54)
      throw ParseError("truncated ATOM/HETATM record", line_no);
    const char alt_loc = line.size() > 16 ? line[16] : ' ';
    if (alt_loc != ' ' && alt_loc != 'A') continue;
    Atom atom;
    atom.element = pdb_element(line, line_no);
    const char* axis_name[3] = {"x", "y", "z"};
    for (int k = 0; k < 3; ++k) {
      double v = 0.0;
      if (!parse_double_strict(column(line, 30 + 8 * k, 8), &v))
        throw ParseError(std::string("malformed ") + axis_name[k] +
                             " coordinate",
                         line_no);
      atom.position[k] = v;
    }
    s.atoms.push_back(atom);
  }
  return s;
}

Structure parse_xyz(const std::string& text, const std::string& id) {
  Structure s;
  s.id = id;
  std::istringstream in(text);
  std::string line;
  long line_no = 0;
  long count = -1;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty()) continue;
    try {
      std::size_t pos = 0;
      count = std::stol(t, &pos);
      if (pos != t.size() || count < 0) throw std::invalid_argument("count");
    } catch (const std::exception&) {
      throw ParseError("malformed atom count '" + t + "'", line_no);
    }
    break;
  }
  if (count < 0) throw StructureError("empty structure: no atom count line");
  long parsed = 0;
  while (parsed < count && std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty())
      throw ParseError("blank line inside atom list", line_no);
    std::istringstream fields(line);
    std::string sym, xs, ys, zs, extra;
    fields >> sym >> xs >> ys >> zs;
    if (zs.empty()) throw ParseError("expected 'SYMBOL x y z'", line_no);
    if (fields >> extra)
      throw ParseError("unexpected extra field '" + extra + "'", line_no);
    Atom atom;
    atom.element = element_from_symbol(normalize_symbol(sym));
    if (atom.element == 0)
      throw ParseError("unknown element symbol '" + sym + "'", line_no);
    const std::string* coords[3] = {&xs, &ys, &zs};
    const char* axis_name[3] = {"x", "y", "z"};
    for (int k = 0; k < 3; ++k) {
      double v = 0.0;
      if (!parse_double_strict(*coords[k], &v))
        throw ParseError(std::string("malformed ") + axis_name[k] +
                             " coordinate '" + *coords[k] + "'",
                         line_no);
      atom.position[k] = v;
    }
    s.atoms.push_back(atom);
    ++parsed;
  }
  if (parsed < count)
    throw ParseError("file ends after " + std::to_string(parsed) + " of " +
                         std::to_string(count) + " atoms",
                     line_no + 1);
  while (std::getline(in, line)) {
    ++line_no;
    if (!trim(line).empty())
      throw ParseError("trailing content after atom list", line_no);
  }
  return s;
}

void check_atom_count(const Structure& s) {
  if (s.atoms.empty())
    throw StructureError("empty structure: no atoms parsed" +
                         (s.id.empty() ? "" : " from " + s.id));
  if (s.atoms.size() < 2)
    throw StructureError("degenerate structure: fewer than 2 atoms" +
                         (s.id.empty() ? "" : " in " + s.id));
  for (const Atom& a : s.atoms) {
    if (!a.position.allFinite())
      throw StructureError("non-finite coordinate" +
                           (s.id.empty() ? "" : " in " + s.id));
  }
}

}  // namespace

int element_from_symbol(const std::string& symbol) {
  static const std::unordered_map<std::string, int> lookup = [] {
    std::unordered_map<std::string, int> m;
    for (std::size_t z = 1; z < kSymbols.size(); ++z) m[kSymbols[z]] = int(z);
    return m;
  }();
  const auto it = lookup.find(normalize_symbol(symbol));
  return it == lookup.end() ? 0 : it->second;
}

const std::string& symbol_from_element(int z) {
  if (z <= 0 || z >= static_cast<int>(kSymbols.size()))
    throw DomainError("no symbol for atomic number " + std::to_string(z));
  return kSymbols[static_cast<std::size_t>(z)];
}

Structure parse_structure(const std::string& text, StructureFormat format,
                          const std::string& id) {
  Structure s =
      format == StructureFormat::pdb ? parse_pdb(text, id) : parse_xyz(text, id);
  check_atom_count(s);
  return s;
}

Structure read_structure_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open structure file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  const StructureFormat format =
      path.size() >= 4 && path.compare(path.size() - 4, 4, ".xyz") == 0
          ? StructureFormat::xyz
          : StructureFormat::pdb;
  return parse_structure(buf.str(), format, path);
}

std::string write_xyz(const Structure& s) {
  std::string out = std::to_string(s.atoms.size()) + "\n";
  char buf[128];
  for (const Atom& a : s.atoms) {
    std::snprintf(buf, sizeof buf, "%s %.17g %.17g %.17g\n",
                  symbol_from_element(a.element).c_str(), a.position[0],
                  a.position[1], a.position[2]);
    out += buf;
  }
  return out;
}

void write_xyz_file(const std::string& path, const Structure& s) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open file for writing: " + path);
  out << write_xyz(s);
  if (!out) throw IoError("write failed: " + path);
}

Structure filter_heavy_cno(const Structure& s) {
  Structure out;
  out.id = s.id;
  for (const Atom& a : s.atoms) {
    if (a.element == 6 || a.element == 7 || a.element == 8)
      out.atoms.push_back(a);
  }
  if (out.atoms.size() < 2)
    throw StructureError(
        "degenerate structure: fewer than 2 C/N/O atoms remain" +
        (s.id.empty() ? "" : " in " + s.id));
  return out;
}

double kabsch_rmsd(const std::vector<Eigen::Vector3d>& a,
                   const std::vector<Eigen::Vector3d>& b) {
  if (a.size() != b.size())
    throw StructureError("correspondence error: structures have " +
                         std::to_string(a.size()) + " and " +
                         std::to_string(b.size()) + " atoms");
  if (a.empty()) throw StructureError("empty structure in RMSD");
  const auto n = static_cast<Eigen::Index>(a.size());

  Eigen::Matrix3Xd pa(3, n), pb(3, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    pa.col(i) = a[static_cast<std::size_t>(i)];
    pb.col(i) = b[static_cast<std::size_t>(i)];
  }
  const Eigen::Vector3d ca = pa.rowwise().mean();
  const Eigen::Vector3d cb = pb.rowwise().mean();
  pa.colwise() -= ca;
  pb.colwise() -= cb;

  // R = argmax tr(R H) over proper rotations, H = sum_i b_i a_i^T.
  const Eigen::Matrix3d h = pb * pa.transpose();
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(h, Eigen::ComputeFullU |
                                               Eigen::ComputeFullV);
  const Eigen::Matrix3d u = svd.matrixU();
  const Eigen::Matrix3d v = svd.matrixV();
  Eigen::Vector3d correction(1.0, 1.0, 1.0);
  if ((v * u.transpose()).determinant() < 0.0) correction[2] = -1.0;
  const Eigen::Matrix3d rot = v * correction.asDiagonal() * u.transpose();

  const double ss = (pa - rot * pb).squaredNorm();
  return std::sqrt(std::max(0.0, ss / static_cast<double>(n)));
}

double kabsch_rmsd(const Structure& a, const Structure& b) {
  return kabsch_rmsd(a.positions(), b.positions());
}

}  // namespace paxnet
