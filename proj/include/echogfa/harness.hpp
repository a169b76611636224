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
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "echogfa/curve.hpp"
#include "echogfa/master.hpp"
#include "echogfa/rmt.hpp"

namespace echogfa::harness {

enum class SimulationMethod { automatic, volterra, superoperator, stepper };

std::string to_string(SimulationMethod method);
/// Accepts "auto", "volterra", "superoperator", "stepper"; throws InvalidArgument otherwise.
SimulationMethod simulation_method_from_string(const std::string& name);

struct ExperimentConfig {
  /// dim, beta and master_seed; realization_index is assigned per sample.
  rmt::EnsembleConfig ensemble;
  double lambda = 0.0;
  std::vector<double> gamma_list;
  TimeGrid grid;
  Index n_run = 1;
  Index n_batch = 3;
  SimulationMethod method = SimulationMethod::automatic;
  /// Maximally mixed when empty.
  std::optional<Eigen::MatrixXcd> initial_state;
  Index max_superoperator_dim = 64;
  /// Worker count. Never changes results.
  unsigned threads = 1;

  void validate() const;
  /// volterra above dim 32, superoperator at or below.
  SimulationMethod resolved_method() const;
};

/// Stable digest of every field that influences results (threads excluded).
std::string config_fingerprint(const ExperimentConfig& config);

struct GammaCurves {
  double gamma = 0.0;
  std::optional<double> alpha;  ///< gamma / lambda, empty when lambda == 0
  FidelityCurve simulated;              ///< f_{lambda,Gamma}
  FidelityCurve simulated_difference;   ///< f_{lambda,Gamma} - f_lambda
  FidelityCurve theory_phi;             ///< phi from the averaged kernels
  FidelityCurve theory;                 ///< e^{-Gamma t} phi
  FidelityCurve theory_difference;      ///< theory - f_lambda
  FidelityCurve first_order;
};

struct RunMetadata {
  std::uint64_t master_seed = 0;
  SimulationMethod method = SimulationMethod::automatic;
  Index n_run = 0;
  Index n_batch = 0;
  std::string config_hash;
  double elapsed_seconds = 0.0;
  unsigned threads = 1;
};

struct RunReport {
  FidelityCurve fidelity;  ///< ensemble-averaged f_lambda
  FidelityCurve kernel;    ///< ensemble-averaged fbar_lambda
  std::vector<GammaCurves> per_gamma;
  RunMetadata metadata;
};

/// Called after each finished block of realizations; side channel only.
using ProgressCallback = std::function<void(Index done, Index total)>;

/// Batch b, sample r uses realization index b * n_run + r. Curves are batch
/// means averaged over batches, errors the standard error of the batch means.
/// Theory curves come from the Volterra equation on the averaged kernels;
/// their errors are the spread of the per-batch theories.
RunReport run_ensemble(const ExperimentConfig& config, const ProgressCallback& progress = {});

/// a - b; errors combined in quadrature, a missing error counting as zero.
FidelityCurve difference_curve(const FidelityCurve& a, const FidelityCurve& b);

/// generalized_fidelity(solve(f, kernel, Gamma), Gamma) for every Gamma.
std::vector<FidelityCurve> theory_pipeline(const FidelityCurve& f, const FidelityCurve& kernel,
                                           const std::vector<double>& gamma_list);

/// Mean and standard error of the mean over samples (componentwise for the
/// real and imaginary parts). The error is empty for fewer than two samples.
FidelityCurve mean_with_error(const std::vector<FidelityCurve>& samples);

/// Per-realization f_{lambda,Gamma} by the given (resolved) method; f itself at Gamma = 0.
FidelityCurve realization_fidelity(const echo::EchoSystem& system, const FidelityCurve& f,
                                   const FidelityCurve& kernel, const Eigen::MatrixXcd& rho0,
                                   double gamma, SimulationMethod method,
                                   const master::PropagationOptions& options = {});

}  // namespace echogfa::harness
