// Copyright 2026 The echo-gfa Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>

#include <Eigen/Dense>

#include "echogfa/curve.hpp"
#include "echogfa/rng.hpp"

namespace echogfa::rmt {

/// Dyson index of the Gaussian ensemble.
enum class SymmetryClass : int { orthogonal = 1, unitary = 2 };

/// Throws InvalidClass for anything but 1 or 2.
SymmetryClass symmetry_class_from_beta(int beta);

struct EnsembleConfig {
  Index dim = 2;
  SymmetryClass beta = SymmetryClass::orthogonal;
  std::uint64_t master_seed = 0;
  std::uint64_t realization_index = 0;

  void validate() const;
};

/// One random-matrix draw. The environment Hamiltonian is kept in its own
/// eigenbasis; the perturbation is drawn directly in that basis, which is
/// legitimate because the Gaussian ensembles are basis invariant.
struct Realization {
  Eigen::VectorXd env_levels;      ///< ascending, unit mean spacing
  Eigen::MatrixXcd perturbation;   ///< Hermitian (real symmetric for GOE)
  EnsembleConfig config;
};

/// Gaussian ensemble with <V_ij V_kl> = d_jk d_il (GUE) and
/// <V_ij V_kl> = d_jk d_il + d_ik d_jl (GOE): off-diagonal E|V_ij|^2 = 1,
/// diagonal variance 2 (GOE) or 1 (GUE). Hermitian by construction.
Eigen::MatrixXcd sample_gaussian(Index dim, SymmetryClass beta, rng::Engine& rng);

/// Eigenvalues of a Gaussian-ensemble matrix mapped through the integrated
/// semicircle, then scaled so (x_max - x_min) / (dim - 1) == 1. The result is
/// ascending and centred on zero.
Eigen::VectorXd unfolded_spectrum(Index dim, SymmetryClass beta, rng::Engine& rng);

/// Deterministic in (master_seed, realization_index); spectrum and
/// perturbation come from independent sub-streams.
Realization build_realization(const EnsembleConfig& config);

}  // namespace echogfa::rmt
