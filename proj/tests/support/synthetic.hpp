// Copyright 2026 PaxNet contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>

#include "paxnet/geom.hpp"
#include "paxnet/rng.hpp"

namespace paxnet::test {

// Random compact chain of C/N/O atoms: ~1.5 A steps confined to a ball whose
// radius scales with n^(1/3), with a minimum separation so no pair collapses.
Structure random_folded_chain(int num_atoms, std::uint64_t seed);

// Uniformly random C/N/O cloud in a cube of the given side length, with a
// minimum pair separation.
Structure random_cloud(int num_atoms, double box, std::uint64_t seed);

// Random points for neighbor-search tests (no element bookkeeping).
std::vector<Eigen::Vector3d> random_points(int n, double box,
                                           std::uint64_t seed);

// Proper rotation from three Euler angles plus translation, applied to every
// atom.
Structure rigid_motion(const Structure& s, double alpha, double beta,
                       double gamma, const Eigen::Vector3d& shift);

Eigen::Matrix3d rotation_zyz(double alpha, double beta, double gamma);

}  // namespace paxnet::test
