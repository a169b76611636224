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
#include <span>
#include <vector>

namespace echogfa::detail {

/// c_k = sum_j a_j b_{k-j} for k < out_len, computed through FFTW.
/// Thread-safe: plans are created under a lock and cached per size.
std::vector<std::complex<double>> linear_convolution(std::span<const std::complex<double>> a,
                                                     std::span<const std::complex<double>> b,
                                                     std::size_t out_len);

}  // namespace echogfa::detail
