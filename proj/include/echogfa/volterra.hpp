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

#include "echogfa/curve.hpp"

namespace echogfa::volterra {

/// phi(t) = f(t) + rate * int_0^t kernel(t - tau) phi(tau) dtau.
struct VolterraProblem {
  FidelityCurve inhomogeneity;  ///< f_lambda
  FidelityCurve kernel;         ///< fbar_lambda, kernel[0] == 1
  double rate = 0.0;            ///< Gamma

  void validate() const;
};

/// Trapezoid convolution (a * b)(t_n) = dt [a_0 b_n / 2 + sum_{m=1}^{n-1} a_m b_{n-m} + a_n b_0 / 2].
FidelityCurve convolve(const FidelityCurve& a, const FidelityCurve& b);

/// Equal-step trapezoid solution with the diagonal term treated implicitly:
///   phi_n = [f_n + G dt (kernel_n phi_0 / 2 + sum_{m=1}^{n-1} kernel_{n-m} phi_m)] / (1 - G dt / 2).
/// Throws StepsizeError when G dt / 2 >= 1.
FidelityCurve solve(const VolterraProblem& problem);

/// e^{-rate t} phi(t).
FidelityCurve generalized_fidelity(const FidelityCurve& phi, double rate);

/// e^{-rate t} [f(t) + rate (kernel * f)(t)], the series cut after O(rate).
FidelityCurve first_order(const FidelityCurve& f, const FidelityCurve& kernel, double rate);

namespace detail {
/// Plain O(n^2) forward substitution; `solve` switches to a divide-and-conquer
/// FFT history sum on long grids and must agree with this to rounding.
FidelityCurve solve_direct(const VolterraProblem& problem);
FidelityCurve solve_fast(const VolterraProblem& problem);
}  // namespace detail

}  // namespace echogfa::volterra
