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

#include <complex>
#include <optional>
#include <string_view>
#include <vector>

#include <Eigen/Core>

namespace echogfa {

using Complex = std::complex<double>;
using Index = Eigen::Index;

/// Uniform grid t_i = i * dt, i = 0 .. points-1.
struct TimeGrid {
  double dt = 0.0;
  Index points = 0;

  /// Grid with `n_steps` intervals, i.e. n_steps + 1 points.
  static TimeGrid uniform(double dt, Index n_steps);

  double time(Index i) const { return static_cast<double>(i) * dt; }
  double t_max() const { return points > 0 ? time(points - 1) : 0.0; }
  Index size() const { return points; }
  bool empty() const { return points == 0; }

  /// Throws InvalidGrid unless dt is finite and positive and the grid is non-empty.
  void validate() const;

  friend bool operator==(const TimeGrid&, const TimeGrid&) = default;
};

/// Complex function tabulated on a TimeGrid. `error` packs the standard
/// error of the real part into .real() and of the imaginary part into .imag().
struct FidelityCurve {
  TimeGrid grid;
  std::vector<Complex> values;
  std::optional<std::vector<Complex>> error;

  static FidelityCurve constant(const TimeGrid& grid, Complex value);

  Index size() const { return static_cast<Index>(values.size()); }
  Complex operator[](Index i) const { return values[static_cast<std::size_t>(i)]; }
};

/// Throws ShapeError when the two curves do not share one grid.
void require_same_grid(const FidelityCurve& a, const FidelityCurve& b, std::string_view context);

}  // namespace echogfa
