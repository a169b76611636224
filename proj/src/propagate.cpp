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

#include <algorithm>
#include <cmath>
#include <iostream>
#include <mutex>
#include <optional>
#include <sstream>

#include <lapacke.h>

#include "echogfa/error.hpp"
#include "echogfa/master.hpp"

extern "C" void openblas_set_num_threads(int num_threads);

namespace echogfa::master {

namespace {

// BLAS threads would compete with the harness workers and make reduction
// order depend on the machine.
void pin_blas_threads() {
  static std::once_flag flag;
  std::call_once(flag, [] { openblas_set_num_threads(1); });
}

lapack_complex_double* lapack_ptr(Complex* p) {
  return reinterpret_cast<lapack_complex_double*>(p);
}

// ---------------------------------------------------------------------------
// Spectral route: diagonalize the dense superoperator and synthesize
// vec(rho(t)) = V exp(w t) V^{-1} vec(rho0).

std::optional<Trajectory> propagate_spectral(const EchoGenerator& generator,
                                             const Eigen::MatrixXcd& rho0, const TimeGrid& grid,
                                             const PropagationOptions& options,
                                             std::vector<std::string>& warnings) {
  pin_blas_threads();
  const Index n = generator.dim();
  const Index n2 = n * n;
  const auto ln = static_cast<lapack_int>(n2);

  Eigen::MatrixXcd s = generator.superoperator();
  Eigen::VectorXcd w(n2);
  Eigen::MatrixXcd v(n2, n2);
  lapack_int info = LAPACKE_zgeev(LAPACK_COL_MAJOR, 'N', 'V', ln, lapack_ptr(s.data()), ln,
                                  lapack_ptr(w.data()), nullptr, ln, lapack_ptr(v.data()), ln);
  if (info != 0) {
    warnings.push_back("superoperator eigensolver failed (zgeev info=" + std::to_string(info) +
                       "); falling back to the stepper");
    return std::nullopt;
  }
  s.resize(0, 0);

  Eigen::MatrixXcd lu = v;
  std::vector<lapack_int> pivots(static_cast<std::size_t>(n2));
  const double norm1 = lu.cwiseAbs().colwise().sum().maxCoeff();
  info = LAPACKE_zgetrf(LAPACK_COL_MAJOR, ln, ln, lapack_ptr(lu.data()), ln, pivots.data());
  double rcond = 0.0;
  if (info == 0) {
    info = LAPACKE_zgecon(LAPACK_COL_MAJOR, '1', ln, lapack_ptr(lu.data()), ln, norm1, &rcond);
  }
  if (info != 0 || !(rcond * options.max_condition > 1.0)) {
    std::ostringstream msg;
    msg << "superoperator eigenvector matrix is ill-conditioned (cond ~ "
        << (rcond > 0.0 ? 1.0 / rcond : INFINITY) << "); falling back to the stepper";
    warnings.push_back(msg.str());
    return std::nullopt;
  }

  Eigen::VectorXcd coeff = Eigen::Map<const Eigen::VectorXcd>(rho0.data(), n2);
  info = LAPACKE_zgetrs(LAPACK_COL_MAJOR, 'N', ln, 1, lapack_ptr(lu.data()), ln, pivots.data(),
                        lapack_ptr(coeff.data()), ln);
  if (info != 0) throw NumericError("superoperator back-substitution failed");
  lu.resize(0, 0);

  Trajectory out;
  out.grid = grid;
  out.method_used = PropagationMethod::superoperator;
  out.states.reserve(static_cast<std::size_t>(grid.size()));

  constexpr Index kChunk = 32;
  for (Index first = 0; first < grid.size(); first += kChunk) {
    const Index count = std::min(kChunk, grid.size() - first);
    Eigen::MatrixXcd modes(n2, count);
    for (Index c = 0; c < count; ++c) {
      const double t = grid.time(first + c);
      modes.col(c) = ((w * t).array().exp() * coeff.array()).matrix();
    }
    const Eigen::MatrixXcd block = v * modes;
    for (Index c = 0; c < count; ++c) {
      out.states.emplace_back(Eigen::Map<const Eigen::MatrixXcd>(block.col(c).data(), n, n));
    }
  }
  for (const auto& state : out.states) {
    if (!state.allFinite()) throw NumericError("spectral synthesis produced non-finite values");
  }
  return out;
}

// ---------------------------------------------------------------------------
// Stepper: Dormand-Prince 5(4) with Hairer's continuous extension.

namespace dp {
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                 a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192, a75 = -2187.0 / 6784,
                 a76 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                 e6 = 22.0 / 525, e7 = -1.0 / 40;
constexpr double d1 = -12715105075.0 / 11282082432, d3 = 87487479700.0 / 32700410799,
                 d4 = -10690763975.0 / 1880347072, d5 = 701980252875.0 / 199316789632,
                 d6 = -1453857185.0 / 822651844, d7 = 69997945.0 / 29380423;
}  // namespace dp

class Stepper {
 public:
  Stepper(const EchoGenerator& generator, const PropagationOptions& options)
      : generator_(generator), options_(options) {}

  Trajectory run(const Eigen::MatrixXcd& rho0, const TimeGrid& grid) {
    Trajectory out;
    out.grid = grid;
    out.method_used = PropagationMethod::stepper;
    out.states.reserve(static_cast<std::size_t>(grid.size()));
    out.states.push_back(rho0);
    if (grid.size() == 1) return out;

    const double t_end = grid.t_max();
    double t = 0.0;
    Eigen::MatrixXcd y = rho0;
    Eigen::MatrixXcd k1 = rhs(t, y);
    double h = initial_step(t, y, k1, t_end);
    Index next = 1;
    std::size_t steps = 0;

    while (next < grid.size()) {
      if (++steps > options_.max_steps) {
        throw NumericError("stepper exceeded " + std::to_string(options_.max_steps) + " steps");
      }
      const bool last = t + h >= t_end;
      if (last) h = t_end - t;
      if (!(h > 1e-14 * std::max(1.0, std::abs(t)))) {
        std::ostringstream msg;
        msg << "stepper step size underflow at t=" << t << " (h=" << h << ")";
        throw NumericError(msg.str());
      }

      using namespace dp;
      const Eigen::MatrixXcd k2 = rhs(t + c2 * h, y + h * a21 * k1);
      const Eigen::MatrixXcd k3 = rhs(t + c3 * h, y + h * (a31 * k1 + a32 * k2));
      const Eigen::MatrixXcd k4 = rhs(t + c4 * h, y + h * (a41 * k1 + a42 * k2 + a43 * k3));
      const Eigen::MatrixXcd k5 =
          rhs(t + c5 * h, y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4));
      const Eigen::MatrixXcd k6 =
          rhs(t + h, y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
      const Eigen::MatrixXcd y_new =
          y + h * (a71 * k1 + a73 * k3 + a74 * k4 + a75 * k5 + a76 * k6);
      const double t_new = last ? t_end : t + h;
      const Eigen::MatrixXcd k7 = rhs(t_new, y_new);

      const Eigen::MatrixXcd err =
          h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
      const double err_norm = scaled_norm(err, y, y_new);
      if (!std::isfinite(err_norm)) {
        throw NumericError("stepper produced non-finite values at t=" + std::to_string(t));
      }

      if (err_norm <= 1.0) {
        // Dense output for every grid point inside (t, t_new].
        if (next < grid.size() && grid.time(next) <= t_new) {
          const Eigen::MatrixXcd ydiff = y_new - y;
          const Eigen::MatrixXcd bspl = h * k1 - ydiff;
          const Eigen::MatrixXcd r4 = ydiff - h * k7 - bspl;
          const Eigen::MatrixXcd r5 = h * (d1 * k1 + d3 * k3 + d4 * k4 + d5 * k5 + d6 * k6 + d7 * k7);
          while (next < grid.size() && grid.time(next) <= t_new) {
            const double theta = last && next == grid.size() - 1 ? 1.0 : (grid.time(next) - t) / h;
            const double theta1 = 1.0 - theta;
            out.states.push_back(y + theta * (ydiff + theta1 * (bspl + theta * (r4 + theta1 * r5))));
            ++next;
          }
        }
        t = t_new;
        y = y_new;
        k1 = k7;
        const double factor =
            err_norm == 0.0 ? 10.0 : std::clamp(0.9 * std::pow(err_norm, -0.2), 0.2, 10.0);
        h *= factor;
      } else {
        h *= std::clamp(0.9 * std::pow(err_norm, -0.2), 0.2, 1.0);
      }
    }
    return out;
  }

 private:
  Eigen::MatrixXcd rhs(double t, const Eigen::MatrixXcd& y) const {
    Eigen::MatrixXcd out = generator_.apply(y);
    if (options_.inhomogeneity) out += options_.inhomogeneity(t);
    return out;
  }

  double scaled_norm(const Eigen::MatrixXcd& err, const Eigen::MatrixXcd& a,
                     const Eigen::MatrixXcd& b) const {
    const Eigen::ArrayXXd scale =
        options_.atol + options_.rtol * a.cwiseAbs().array().max(b.cwiseAbs().array());
    return std::sqrt((err.cwiseAbs().array() / scale).square().mean());
  }

  double scaled_norm(const Eigen::MatrixXcd& v, const Eigen::MatrixXcd& y) const {
    return scaled_norm(v, y, y);
  }

  // Hairer & Wanner's starting-step heuristic.
  double initial_step(double t, const Eigen::MatrixXcd& y, const Eigen::MatrixXcd& f0,
                      double t_end) const {
    const double d0 = scaled_norm(y, y);
    const double d1 = scaled_norm(f0, y);
    double h0 = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
    h0 = std::min(h0, t_end);
    const Eigen::MatrixXcd f1 = rhs(t + h0, y + h0 * f0);
    const double d2 = scaled_norm(f1 - f0, y) / h0;
    const double dmax = std::max(d1, d2);
    const double h1 = dmax <= 1e-15 ? std::max(1e-6, h0 * 1e-3) : std::pow(0.01 / dmax, 0.2);
    return std::min({100.0 * h0, h1, t_end});
  }

  const EchoGenerator& generator_;
  const PropagationOptions& options_;
};

}  // namespace

Trajectory propagate(const EchoGenerator& generator, const Eigen::MatrixXcd& rho0,
                     const TimeGrid& grid, PropagationMethod method,
                     const PropagationOptions& options) {
  grid.validate();
  if (rho0.rows() != generator.dim() || rho0.cols() != generator.dim()) {
    throw ShapeError("propagate: initial state dimension does not match the generator");
  }
  if (!rho0.allFinite()) throw NumericError("propagate: initial state has non-finite entries");

  const bool fits = generator.dim() <= options.max_superoperator_dim;
  if (method == PropagationMethod::superoperator && !fits) {
    throw ResourceError("superoperator method needs a " + std::to_string(generator.dim() * generator.dim()) +
                        "-dimensional eigenproblem; dim " + std::to_string(generator.dim()) +
                        " exceeds the limit of " + std::to_string(options.max_superoperator_dim));
  }
  if (method == PropagationMethod::automatic) {
    method = fits ? PropagationMethod::superoperator : PropagationMethod::stepper;
  }

  std::vector<std::string> warnings;
  if (method == PropagationMethod::superoperator && options.inhomogeneity) {
    warnings.push_back("inhomogeneous term requested; using the stepper instead of the superoperator");
    method = PropagationMethod::stepper;
  }
  if (method == PropagationMethod::superoperator) {
    if (auto spectral = propagate_spectral(generator, rho0, grid, options, warnings)) {
      spectral->warnings = std::move(warnings);
      return std::move(*spectral);
    }
  }
  for (const auto& w : warnings) std::clog << "warning: " << w << '\n';
  Trajectory out = Stepper(generator, options).run(rho0, grid);
  out.warnings = std::move(warnings);
  return out;
}

FidelityCurve trace_curve(const Trajectory& trajectory) {
  if (trajectory.states.empty()) throw InvalidArgument("trace_curve: empty trajectory");
  FidelityCurve out = FidelityCurve::constant(trajectory.grid, Complex(0.0));
  out.values.resize(trajectory.states.size());
  for (std::size_t i = 0; i < trajectory.states.size(); ++i) {
    out.values[i] = trajectory.states[i].trace();
  }
  return out;
}

}  // namespace echogfa::master
