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

#include "echogfa/rmt.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "echogfa/error.hpp"

namespace echogfa::rmt {

namespace {

void check_dim(Index dim) {
  if (dim < 2) {
    throw InvalidDimension("ensemble dimension must be at least 2, got " + std::to_string(dim));
  }
}

void check_class(SymmetryClass beta) {
  if (beta != SymmetryClass::orthogonal && beta != SymmetryClass::unitary) {
    throw InvalidClass("unknown symmetry class beta=" + std::to_string(static_cast<int>(beta)));
  }
}

// Number of semicircle levels below `energy` for a spectrum of radius `radius`.
double semicircle_count(double energy, double radius, Index dim) {
  const double x = std::clamp(energy / radius, -1.0, 1.0);
  const double fraction = 0.5 + (x * std::sqrt(1.0 - x * x) + std::asin(x)) / std::numbers::pi;
  return static_cast<double>(dim) * fraction;
}

}  // namespace

SymmetryClass symmetry_class_from_beta(int beta) {
  if (beta == 1) return SymmetryClass::orthogonal;
  if (beta == 2) return SymmetryClass::unitary;
  throw InvalidClass("unknown symmetry class beta=" + std::to_string(beta) + " (expected 1 or 2)");
}

void EnsembleConfig::validate() const {
  check_dim(dim);
  check_class(beta);
}

Eigen::MatrixXcd sample_gaussian(Index dim, SymmetryClass beta, rng::Engine& rng) {
  check_dim(dim);
  check_class(beta);

  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXcd m(dim, dim);
  const bool orthogonal = beta == SymmetryClass::orthogonal;
  const double diag_sigma = orthogonal ? std::numbers::sqrt2 : 1.0;
  const double offdiag_sigma = orthogonal ? 1.0 : 1.0 / std::numbers::sqrt2;

  for (Index j = 0; j < dim; ++j) {
    m(j, j) = Complex(diag_sigma * normal(rng), 0.0);
    for (Index i = 0; i < j; ++i) {
      const double re = offdiag_sigma * normal(rng);
      const double im = orthogonal ? 0.0 : offdiag_sigma * normal(rng);
      m(i, j) = Complex(re, im);
      m(j, i) = Complex(re, -im);
    }
  }
  return m;
}

Eigen::VectorXd unfolded_spectrum(Index dim, SymmetryClass beta, rng::Engine& rng) {
  const Eigen::MatrixXcd h = sample_gaussian(dim, beta, rng);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(h, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) {
    throw NumericError("eigenvalue solver failed while unfolding a spectrum");
  }
  Eigen::VectorXd levels = solver.eigenvalues();
  std::sort(levels.begin(), levels.end());

  // Off-diagonal variance 1 puts the semicircle edge at 2 sqrt(N).
  const double radius = 2.0 * std::sqrt(static_cast<double>(dim));
  for (double& e : levels) e = semicircle_count(e, radius, dim);

  const double lo = levels[0];
  const double hi = levels[dim - 1];
  if (!(hi > lo)) {
    throw NumericError("degenerate unfolded spectrum");
  }
  const double scale = static_cast<double>(dim - 1) / (hi - lo);
  const double centre = 0.5 * static_cast<double>(dim - 1);
  for (double& e : levels) e = (e - lo) * scale - centre;
  return levels;
}

Realization build_realization(const EnsembleConfig& config) {
  config.validate();
  auto level_stream = rng::make_stream(config.master_seed, config.realization_index, "levels");
  auto coupling_stream =
      rng::make_stream(config.master_seed, config.realization_index, "perturbation");
  Realization r;
  r.env_levels = unfolded_spectrum(config.dim, config.beta, level_stream);
  r.perturbation = sample_gaussian(config.dim, config.beta, coupling_stream);
  r.config = config;
  return r;
}

}  // namespace echogfa::rmt
