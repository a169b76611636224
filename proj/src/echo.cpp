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

#include "echogfa/echo.hpp"

#include <cmath>
#include <string>

#include "echogfa/error.hpp"

namespace echogfa::echo {

namespace {

constexpr double kStateTolerance = 1e-12;

Eigen::VectorXcd phases(const Eigen::VectorXd& energies, double sign_t) {
  Eigen::VectorXcd out(energies.size());
  for (Index k = 0; k < energies.size(); ++k) out[k] = std::polar(1.0, sign_t * energies[k]);
  return out;
}

void require_finite(const SpectralData& h) {
  if (!h.energies.allFinite()) {
    throw NumericError("spectral data contains non-finite eigenvalues");
  }
}

}  // namespace

SpectralData SpectralData::of(const Eigen::MatrixXcd& hermitian) {
  if (hermitian.rows() != hermitian.cols()) {
    throw ShapeError("eigendecomposition needs a square matrix");
  }
  if (!hermitian.allFinite()) {
    throw NumericError("cannot diagonalize a matrix with non-finite entries");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(hermitian);
  if (solver.info() != Eigen::Success) {
    throw NumericError("Hermitian eigensolver did not converge");
  }
  return SpectralData{solver.eigenvalues(), solver.eigenvectors()};
}

SpectralData SpectralData::diagonal(const Eigen::VectorXd& levels) {
  return SpectralData{levels, Eigen::MatrixXcd::Identity(levels.size(), levels.size())};
}

Hamiltonian Hamiltonian::from_matrix(const Eigen::MatrixXcd& hermitian) {
  return Hamiltonian{hermitian, SpectralData::of(hermitian)};
}

Hamiltonian Hamiltonian::diagonal(const Eigen::VectorXd& levels) {
  return Hamiltonian{Eigen::MatrixXcd(levels.cast<Complex>().asDiagonal()),
                     SpectralData::diagonal(levels)};
}

Eigen::MatrixXcd propagator(const SpectralData& h, double t) {
  require_finite(h);
  if (!std::isfinite(t)) throw NumericError("propagator time is not finite");
  const Eigen::VectorXcd p = phases(h.energies, -t);
  return h.vectors * p.asDiagonal() * h.vectors.adjoint();
}

Eigen::MatrixXcd maximally_mixed(Index dim) {
  return Eigen::MatrixXcd::Identity(dim, dim) / static_cast<double>(dim);
}

void validate_initial_state(const Eigen::MatrixXcd& rho) {
  if (rho.rows() != rho.cols() || rho.rows() == 0) {
    throw ShapeError("initial state must be a non-empty square matrix");
  }
  if (!rho.allFinite()) throw InvalidArgument("initial state has non-finite entries");
  const double asym = (rho - rho.adjoint()).cwiseAbs().maxCoeff();
  if (asym > kStateTolerance) {
    throw InvalidArgument("initial state is not Hermitian (max |rho - rho^+| = " +
                          std::to_string(asym) + ")");
  }
  const Complex tr = rho.trace();
  if (std::abs(tr - 1.0) > kStateTolerance) {
    throw InvalidArgument("initial state trace is not 1");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(rho, Eigen::EigenvaluesOnly);
  if (solver.eigenvalues().minCoeff() < -kStateTolerance) {
    throw InvalidArgument("initial state is not positive semidefinite");
  }
}

void EchoSetup::validate() const {
  grid.validate();
  if (!std::isfinite(lambda)) throw InvalidArgument("lambda must be finite");
  validate_initial_state(initial_state);
}

EchoSystem::EchoSystem(const rmt::Realization& realization, double lambda)
    : lambda_(lambda), h0_(Hamiltonian::diagonal(realization.env_levels)) {
  if (!std::isfinite(lambda)) throw InvalidArgument("lambda must be finite");
  if (realization.perturbation.rows() != h0_.dim() ||
      realization.perturbation.cols() != h0_.dim()) {
    throw ShapeError("perturbation shape does not match the environment spectrum");
  }
  hl_ = Hamiltonian::from_matrix(h0_.matrix + lambda * realization.perturbation);
  overlap_ = h0_.spectrum.vectors.adjoint() * hl_.spectrum.vectors;
}

Eigen::MatrixXcd EchoSystem::echo_operator(double t) const {
  return propagator(h0_.spectrum, t).adjoint() * propagator(hl_.spectrum, t);
}

// tr[U_0^+ U_l rho] = sum_{a,k} e^{i E_a t} e^{-i e_k t} W_ak with
// W_ak = (V_0^+ V_l)_ak (V_l^+ rho V_0)_ka, so each grid point costs O(N^2).
FidelityCurve EchoSystem::evaluate(const Eigen::MatrixXcd& weights, const TimeGrid& grid) const {
  grid.validate();
  require_finite(h0_.spectrum);
  require_finite(hl_.spectrum);
  FidelityCurve out = FidelityCurve::constant(grid, Complex(0.0));
  for (Index i = 0; i < grid.size(); ++i) {
    const double t = grid.time(i);
    const Eigen::VectorXcd left = phases(h0_.spectrum.energies, t);
    const Eigen::VectorXcd right = phases(hl_.spectrum.energies, -t);
    out.values[static_cast<std::size_t>(i)] = left.transpose() * (weights * right);
  }
  return out;
}

FidelityCurve EchoSystem::fidelity_curve(const Eigen::MatrixXcd& rho0, const TimeGrid& grid) const {
  if (rho0.rows() != dim() || rho0.cols() != dim()) {
    throw ShapeError("initial state dimension does not match the realization");
  }
  const Eigen::MatrixXcd rotated =
      hl_.spectrum.vectors.adjoint() * rho0 * h0_.spectrum.vectors;
  const Eigen::MatrixXcd weights = overlap_.cwiseProduct(rotated.transpose());
  return evaluate(weights, grid);
}

FidelityCurve EchoSystem::kernel_curve(const TimeGrid& grid) const {
  const Eigen::MatrixXcd weights =
      (overlap_.cwiseAbs2() / static_cast<double>(dim())).cast<Complex>();
  return evaluate(weights, grid);
}

Eigen::MatrixXcd echo_operator(const rmt::Realization& realization, double lambda, double t) {
  return EchoSystem(realization, lambda).echo_operator(t);
}

FidelityCurve fidelity_curve(const rmt::Realization& realization, const EchoSetup& setup) {
  setup.validate();
  return EchoSystem(realization, setup.lambda).fidelity_curve(setup.initial_state, setup.grid);
}

FidelityCurve kernel_curve(const rmt::Realization& realization, double lambda,
                           const TimeGrid& grid) {
  return EchoSystem(realization, lambda).kernel_curve(grid);
}

}  // namespace echogfa::echo
