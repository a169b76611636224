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

#include <Eigen/Dense>

#include "echogfa/curve.hpp"
#include "echogfa/rmt.hpp"

namespace echogfa::echo {

/// Eigendecomposition H = V diag(E) V^dagger of a Hermitian matrix.
struct SpectralData {
  Eigen::VectorXd energies;
  Eigen::MatrixXcd vectors;

  static SpectralData of(const Eigen::MatrixXcd& hermitian);
  static SpectralData diagonal(const Eigen::VectorXd& levels);

  Index dim() const { return energies.size(); }
};

/// A Hermitian matrix together with its cached eigendecomposition.
struct Hamiltonian {
  Eigen::MatrixXcd matrix;
  SpectralData spectrum;

  static Hamiltonian from_matrix(const Eigen::MatrixXcd& hermitian);
  static Hamiltonian diagonal(const Eigen::VectorXd& levels);

  Index dim() const { return matrix.rows(); }
};

/// exp(-i H t), assembled in the eigenbasis.
Eigen::MatrixXcd propagator(const SpectralData& h, double t);

/// 1/N on the diagonal.
Eigen::MatrixXcd maximally_mixed(Index dim);

/// Throws InvalidArgument unless rho is Hermitian, positive semidefinite
/// and of unit trace (all within 1e-12).
void validate_initial_state(const Eigen::MatrixXcd& rho);

struct EchoSetup {
  double lambda = 0.0;
  TimeGrid grid;
  Eigen::MatrixXcd initial_state;

  void validate() const;
};

/// Unperturbed H_0 = diag(levels) and perturbed H_lambda = H_0 + lambda V
/// for one realization, with H_lambda diagonalized once at construction.
/// Immutable afterwards, so one instance may be shared across threads.
class EchoSystem {
 public:
  EchoSystem(const rmt::Realization& realization, double lambda);

  const Hamiltonian& unperturbed() const { return h0_; }
  const Hamiltonian& perturbed() const { return hl_; }
  double lambda() const { return lambda_; }
  Index dim() const { return h0_.dim(); }

  /// M(t) = U_0(t)^dagger U_lambda(t).
  Eigen::MatrixXcd echo_operator(double t) const;

  /// tr[M(t_i) rho0] on every grid point.
  FidelityCurve fidelity_curve(const Eigen::MatrixXcd& rho0, const TimeGrid& grid) const;

  /// tr[M(t_i)] / N, the fidelity amplitude of the maximally mixed state.
  FidelityCurve kernel_curve(const TimeGrid& grid) const;

 private:
  FidelityCurve evaluate(const Eigen::MatrixXcd& weights, const TimeGrid& grid) const;

  double lambda_;
  Hamiltonian h0_;
  Hamiltonian hl_;
  Eigen::MatrixXcd overlap_;  // V_0^dagger V_lambda
};

Eigen::MatrixXcd echo_operator(const rmt::Realization& realization, double lambda, double t);
FidelityCurve fidelity_curve(const rmt::Realization& realization, const EchoSetup& setup);
FidelityCurve kernel_curve(const rmt::Realization& realization, double lambda, const TimeGrid& grid);

}  // namespace echogfa::echo
