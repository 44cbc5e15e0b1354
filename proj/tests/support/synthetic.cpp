// Copyright 2026 PaxNet contributors
// SPDX-License-Identifier: Apache-2.0

#include "synthetic.hpp"

#include <Eigen/Geometry>
#include <cmath>

namespace paxnet::test {

namespace {

constexpr int kElements[3] = {6, 7, 8};

Eigen::Vector3d random_direction(Rng& rng) {
  // Uniform on the sphere via the z/phi parametrization.
  const double z = rng.uniform(-1.0, 1.0);
  const double phi = rng.uniform(0.0, 2.0 * M_PI);
  const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
  return {r * std::cos(phi), r * std::sin(phi), z};
}

bool far_enough(const std::vector<Atom>& atoms, const Eigen::Vector3d& p,
                double min_sep) {
  for (const Atom& a : atoms) {
    if ((a.position - p).norm() < min_sep) return false;
  }
  return true;
}

}  // namespace

Structure random_folded_chain(int num_atoms, std::uint64_t seed) {
  Rng rng(seed);
  Structure s;
  s.id = "chain" + std::to_string(seed);
  const double step = 1.5;
  const double min_sep = 0.9;
  const double radius =
      1.9 * step * std::cbrt(static_cast<double>(num_atoms));
  Eigen::Vector3d current(0.0, 0.0, 0.0);
  s.atoms.push_back(
      Atom{kElements[rng.uniform_index(3)], current});
  while (static_cast<int>(s.atoms.size()) < num_atoms) {
    Eigen::Vector3d next;
    bool ok = false;
    for (int attempt = 0; attempt < 64 && !ok; ++attempt) {
      next = current + step * random_direction(rng);
      ok = next.norm() <= radius && far_enough(s.atoms, next, min_sep);
    }
    if (!ok) next = current - step * current.normalized();  // fold back inward
    s.atoms.push_back(Atom{kElements[rng.uniform_index(3)], next});
    current = next;
  }
  return s;
}

Structure random_cloud(int num_atoms, double box, std::uint64_t seed) {
  Rng rng(seed);
  Structure s;
  s.id = "cloud" + std::to_string(seed);
  while (static_cast<int>(s.atoms.size()) < num_atoms) {
    const Eigen::Vector3d p(rng.uniform(0.0, box), rng.uniform(0.0, box),
                            rng.uniform(0.0, box));
    if (!far_enough(s.atoms, p, 0.5)) continue;
    s.atoms.push_back(Atom{kElements[rng.uniform_index(3)], p});
  }
  return s;
}

std::vector<Eigen::Vector3d> random_points(int n, double box,
                                           std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Eigen::Vector3d> out;
  out.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i)
    out.emplace_back(rng.uniform(0.0, box), rng.uniform(0.0, box),
                     rng.uniform(0.0, box));
  return out;
}

Eigen::Matrix3d rotation_zyz(double alpha, double beta, double gamma) {
  return (Eigen::AngleAxisd(alpha, Eigen::Vector3d::UnitZ()) *
          Eigen::AngleAxisd(beta, Eigen::Vector3d::UnitY()) *
          Eigen::AngleAxisd(gamma, Eigen::Vector3d::UnitZ()))
      .toRotationMatrix();
}

Structure rigid_motion(const Structure& s, double alpha, double beta,
                       double gamma, const Eigen::Vector3d& shift) {
  const Eigen::Matrix3d rot = rotation_zyz(alpha, beta, gamma);
  Structure out = s;
  for (Atom& a : out.atoms) a.position = rot * a.position + shift;
  return out;
}

}  // namespace paxnet::test
