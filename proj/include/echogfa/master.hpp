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

#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "echogfa/curve.hpp"
#include "echogfa/echo.hpp"

namespace echogfa::master {

/// Real bath correlation function C(s) on s >= 0.
///
/// The delta kind stands for C(s) = C0 delta(s) on the full time axis, so its
/// one-sided transform is C0/2. Parametric kernels are arbitrary callables
/// with a characteristic decay time; tabulated kernels are linearly
/// interpolated samples on a uniform s grid and vanish past the last sample.
class CorrelationKernel {
 public:
  enum class Kind { delta, parametric, tabulated };

  static CorrelationKernel delta(double area);
  static CorrelationKernel parametric(std::function<double(double)> c, double time_scale,
                                      std::string name = "parametric");
  /// C(s) = amplitude * exp(-s / tau).
  static CorrelationKernel exponential(double amplitude, double tau);
  /// Exponential whose two-sided extension exp(-|s|/tau) has total area `area`;
  /// tends to delta(area) as tau -> 0.
  static CorrelationKernel exponential_with_area(double area, double tau);
  static CorrelationKernel tabulated(double ds, std::vector<double> samples);

  Kind kind() const { return kind_; }
  const std::string& name() const { return name_; }
  /// Weight C0 of the delta kind.
  double area() const { return area_; }
  double time_scale() const { return time_scale_; }

  /// C(s) for the parametric and tabulated kinds.
  double operator()(double s) const;

  /// One-sided transform  int_0^inf C(s) e^{i omega s} ds.
  /// Adaptive Gauss-Kronrod over panels; throws QuadratureError when the
  /// tail does not die out.
  Complex one_sided_transform(double omega) const;

 private:
  CorrelationKernel() = default;

  Kind kind_ = Kind::delta;
  std::string name_;
  double area_ = 0.0;
  double time_scale_ = 0.0;
  std::function<double(double)> function_;
  double ds_ = 0.0;
  std::vector<double> samples_;
};

/// Gamma_H = int_0^inf C(s) U(s) V' U(s)^dagger ds with U(s) = exp(-i H s).
/// In the eigenbasis of H the (a,b) entry is V'_ab * Chat(E_b - E_a).
/// The delta kind returns (C0/2) V' without any rotation.
Eigen::MatrixXcd gamma_operator(const CorrelationKernel& kernel, const echo::SpectralData& h,
                                const Eigen::MatrixXcd& coupling);

enum class GeneratorForm { general, rmt };

/// Linear map on quasi-densities
///
///   L(rho) = -i (H_l rho - rho H_0) + D(rho),
///   D(rho) = -decay rho + A rho + rho B + sum_k L_k rho R_k + c tr(rho) 1.
///
/// Both supported forms are special cases of D. Immutable once built.
class EchoGenerator {
 public:
  GeneratorForm form() const { return form_; }
  Index dim() const { return h_perturbed_.rows(); }
  /// Gamma for the rmt form, gamma (coupling strength) for the general form.
  double strength() const { return strength_; }

  const Eigen::MatrixXcd& perturbed_hamiltonian() const { return h_perturbed_; }
  const Eigen::MatrixXcd& unperturbed_hamiltonian() const { return h_unperturbed_; }

  Eigen::MatrixXcd apply(const Eigen::MatrixXcd& rho) const;
  Eigen::MatrixXcd dissipator(const Eigen::MatrixXcd& rho) const;

  /// Dense dim^2 x dim^2 matrix acting on column-major vec(rho).
  Eigen::MatrixXcd superoperator() const;

 private:
  struct Sandwich {
    Eigen::MatrixXcd left;
    Eigen::MatrixXcd right;
  };

  friend EchoGenerator general_generator(const echo::Hamiltonian&, const echo::Hamiltonian&,
                                         const Eigen::MatrixXcd&, const CorrelationKernel&,
                                         double);
  friend EchoGenerator rmt_generator(const echo::Hamiltonian&, const echo::Hamiltonian&, double);

  GeneratorForm form_ = GeneratorForm::rmt;
  double strength_ = 0.0;
  Eigen::MatrixXcd h_perturbed_;
  Eigen::MatrixXcd h_unperturbed_;
  double decay_ = 0.0;
  Eigen::MatrixXcd left_;   // empty when absent
  Eigen::MatrixXcd right_;  // empty when absent
  std::vector<Sandwich> sandwiches_;
  Complex trace_coefficient_{0.0, 0.0};
};

/// d/dt rho = -i (H_l rho - rho H_0)
///            - gamma^2 { V' G_l rho - V' rho G_0 - G_l rho V' + rho G_0 V' }
/// with G_l, G_0 from gamma_operator on H_l and H_0.
EchoGenerator general_generator(const echo::Hamiltonian& perturbed,
                                const echo::Hamiltonian& unperturbed,
                                const Eigen::MatrixXcd& coupling, const CorrelationKernel& kernel,
                                double gamma);

/// d/dt rho = -i (H_l rho - rho H_0) - Gamma (rho - tr(rho)/N 1).
EchoGenerator rmt_generator(const echo::Hamiltonian& perturbed,
                            const echo::Hamiltonian& unperturbed, double rate);

enum class PropagationMethod { automatic, superoperator, stepper };

struct PropagationOptions {
  /// Largest dim for which the dense dim^2 eigenproblem is attempted.
  Index max_superoperator_dim = 64;
  double rtol = 1e-9;
  double atol = 1e-12;
  /// Eigenvector-matrix condition number above which the spectral route is
  /// abandoned in favour of the stepper.
  double max_condition = 1e12;
  std::size_t max_steps = 50'000'000;
  /// Optional source term J(t) added to the right-hand side, for baths where
  /// the first-order inhomogeneity does not vanish. Forces the stepper.
  std::function<Eigen::MatrixXcd(double)> inhomogeneity;
};

struct Trajectory {
  TimeGrid grid;
  std::vector<Eigen::MatrixXcd> states;
  PropagationMethod method_used = PropagationMethod::automatic;
  std::vector<std::string> warnings;
};

/// Evolve rho0 over the grid. `automatic` picks the superoperator for
/// dim <= max_superoperator_dim and the stepper beyond.
Trajectory propagate(const EchoGenerator& generator, const Eigen::MatrixXcd& rho0,
                     const TimeGrid& grid, PropagationMethod method = PropagationMethod::automatic,
                     const PropagationOptions& options = {});

/// f(t_i) = tr rho(t_i).
FidelityCurve trace_curve(const Trajectory& trajectory);

}  // namespace echogfa::master
