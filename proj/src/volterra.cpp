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

#include "echogfa/volterra.hpp"

#include <cmath>
#include <span>
#include <sstream>

#include "echogfa/error.hpp"
#include "fft.hpp"

namespace echogfa::volterra {

namespace {

constexpr std::size_t kDirectConvolutionLimit = 256;
constexpr std::size_t kDirectSolveLimit = 2048;
constexpr std::size_t kLeaf = 64;

void check_rate(double rate, const char* where) {
  if (!std::isfinite(rate) || rate < 0.0) {
    std::ostringstream msg;
    msg << where << ": rate Gamma must be finite and non-negative, got " << rate;
    throw InvalidRate(msg.str());
  }
}

// Shared state of the forward substitution. history[n] accumulates
// sum_{m<n} w_m kernel_{n-m} phi_m, with w_0 = 1/2 and w_m = 1 otherwise.
struct Recursion {
  const std::vector<Complex>& f;
  const std::vector<Complex>& k;
  double step;      // Gamma dt
  double denom;     // 1 - Gamma dt / 2
  std::vector<Complex> phi;
  std::vector<Complex> weighted;  // w_m phi_m
  std::vector<Complex> history;

  Recursion(const std::vector<Complex>& f_, const std::vector<Complex>& k_, double step_)
      : f(f_), k(k_), step(step_), denom(1.0 - 0.5 * step_), phi(f_.size()),
        weighted(f_.size()), history(f_.size()) {}

  void finish(std::size_t n) {
    phi[n] = n == 0 ? f[0] : (f[n] + step * history[n]) / denom;
    weighted[n] = n == 0 ? 0.5 * phi[n] : phi[n];
  }

  void direct(std::size_t lo, std::size_t hi) {
    for (std::size_t n = lo; n < hi; ++n) {
      Complex acc = history[n];
      for (std::size_t m = lo; m < n; ++m) acc += k[n - m] * weighted[m];
      history[n] = acc;
      finish(n);
    }
  }

  void divide(std::size_t lo, std::size_t hi) {
    if (hi - lo <= kLeaf) {
      direct(lo, hi);
      return;
    }
    const std::size_t mid = lo + (hi - lo) / 2;
    divide(lo, mid);
    // Feed phi on [lo, mid) into the history of [mid, hi).
    const auto contrib = echogfa::detail::linear_convolution(
        std::span<const Complex>(weighted).subspan(lo, mid - lo),
        std::span<const Complex>(k).subspan(0, hi - lo), hi - lo);
    for (std::size_t n = mid; n < hi; ++n) history[n] += contrib[n - lo];
    divide(mid, hi);
  }
};

Recursion prepare(const VolterraProblem& problem) {
  problem.validate();
  return Recursion(problem.inhomogeneity.values, problem.kernel.values,
                   problem.rate * problem.inhomogeneity.grid.dt);
}

FidelityCurve wrap(const VolterraProblem& problem, std::vector<Complex> values) {
  return FidelityCurve{problem.inhomogeneity.grid, std::move(values), std::nullopt};
}

}  // namespace

void VolterraProblem::validate() const {
  require_same_grid(inhomogeneity, kernel, "Volterra problem");
  inhomogeneity.grid.validate();
  check_rate(rate, "Volterra problem");
  if (std::abs(kernel.values.front() - 1.0) > 1e-12) {
    throw InvalidArgument("Volterra kernel must equal 1 at t = 0");
  }
  const double half_step = 0.5 * rate * inhomogeneity.grid.dt;
  if (half_step >= 1.0) {
    std::ostringstream msg;
    msg << "Volterra step too large: Gamma*dt/2 = " << half_step
        << " >= 1; reduce dt below " << 2.0 / rate;
    throw StepsizeError(msg.str());
  }
}

FidelityCurve convolve(const FidelityCurve& a, const FidelityCurve& b) {
  require_same_grid(a, b, "convolve");
  a.grid.validate();
  const std::size_t n = a.values.size();
  const double dt = a.grid.dt;

  std::vector<Complex> full;
  if (n <= kDirectConvolutionLimit) {
    full.assign(n, Complex(0.0));
    for (std::size_t i = 0; i < n; ++i) {
      Complex acc{0.0, 0.0};
      for (std::size_t m = 0; m <= i; ++m) acc += a.values[m] * b.values[i - m];
      full[i] = acc;
    }
  } else {
    full = echogfa::detail::linear_convolution(a.values, b.values, n);
  }

  FidelityCurve out = FidelityCurve::constant(a.grid, Complex(0.0));
  for (std::size_t i = 1; i < n; ++i) {
    const Complex ends = 0.5 * (a.values[0] * b.values[i] + a.values[i] * b.values[0]);
    out.values[i] = dt * (full[i] - ends);
  }
  return out;
}

FidelityCurve detail::solve_direct(const VolterraProblem& problem) {
  Recursion r = prepare(problem);
  r.direct(0, r.f.size());
  return wrap(problem, std::move(r.phi));
}

FidelityCurve detail::solve_fast(const VolterraProblem& problem) {
  Recursion r = prepare(problem);
  r.divide(0, r.f.size());
  return wrap(problem, std::move(r.phi));
}

FidelityCurve solve(const VolterraProblem& problem) {
  if (problem.inhomogeneity.values.size() <= kDirectSolveLimit) {
    return detail::solve_direct(problem);
  }
  return detail::solve_fast(problem);
}

FidelityCurve generalized_fidelity(const FidelityCurve& phi, double rate) {
  check_rate(rate, "generalized_fidelity");
  FidelityCurve out = phi;
  for (Index i = 0; i < phi.size(); ++i) {
    const double decay = std::exp(-rate * phi.grid.time(i));
    out.values[static_cast<std::size_t>(i)] *= decay;
    if (out.error) (*out.error)[static_cast<std::size_t>(i)] *= decay;
  }
  return out;
}

FidelityCurve first_order(const FidelityCurve& f, const FidelityCurve& kernel, double rate) {
  check_rate(rate, "first_order");
  const FidelityCurve conv = convolve(kernel, f);
  FidelityCurve out = FidelityCurve::constant(f.grid, Complex(0.0));
  for (Index i = 0; i < f.size(); ++i) {
    const auto u = static_cast<std::size_t>(i);
    out.values[u] = std::exp(-rate * f.grid.time(i)) * (f.values[u] + rate * conv.values[u]);
  }
  return out;
}

}  // namespace echogfa::volterra
