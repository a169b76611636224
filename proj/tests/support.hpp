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

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <random>

#include <Eigen/Dense>

#include "echogfa/curve.hpp"

namespace echogfa::test {

inline double max_abs_diff(const FidelityCurve& a, const FidelityCurve& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.values.size(); ++i) {
    m = std::max(m, std::abs(a.values[i] - b.values[i]));
  }
  return m;
}

inline double max_abs_deviation(const FidelityCurve& a, Complex value) {
  double m = 0.0;
  for (const auto& v : a.values) m = std::max(m, std::abs(v - value));
  return m;
}

inline Eigen::MatrixXcd random_hermitian(Index n, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> normal;
  Eigen::MatrixXcd a(n, n);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < n; ++j) a(i, j) = Complex(normal(gen), normal(gen));
  }
  return 0.5 * (a + a.adjoint());
}

/// Random full-rank density matrix.
inline Eigen::MatrixXcd random_density(Index n, std::uint64_t seed) {
  const Eigen::MatrixXcd a = random_hermitian(n, seed);
  Eigen::MatrixXcd rho = a * a.adjoint() + 0.1 * Eigen::MatrixXcd::Identity(n, n);
  rho /= rho.trace();
  return 0.5 * (rho + rho.adjoint());
}

}  // namespace echogfa::test
