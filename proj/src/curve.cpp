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

#include "echogfa/curve.hpp"

#include <cmath>
#include <string>

#include "echogfa/error.hpp"

namespace echogfa {

TimeGrid TimeGrid::uniform(double dt, Index n_steps) {
  if (n_steps < 0) {
    throw InvalidGrid("time grid needs a non-negative number of steps");
  }
  TimeGrid grid{dt, n_steps + 1};
  grid.validate();
  return grid;
}

void TimeGrid::validate() const {
  if (!std::isfinite(dt) || dt <= 0.0) {
    throw InvalidGrid("time grid spacing must be finite and positive, got " + std::to_string(dt));
  }
  if (points <= 0) {
    throw InvalidGrid("time grid is empty");
  }
}

FidelityCurve FidelityCurve::constant(const TimeGrid& grid, Complex value) {
  return FidelityCurve{grid, std::vector<Complex>(static_cast<std::size_t>(grid.points), value),
                       std::nullopt};
}

void require_same_grid(const FidelityCurve& a, const FidelityCurve& b, std::string_view context) {
  if (!(a.grid == b.grid) || a.values.size() != b.values.size()) {
    throw ShapeError(std::string(context) + ": curves do not share one time grid (" +
                     std::to_string(a.values.size()) + " vs " + std::to_string(b.values.size()) +
                     " points)");
  }
}

}  // namespace echogfa
