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

#include "fft.hpp"

#include <fftw3.h>

#include <algorithm>
#include <map>
#include <mutex>

namespace echogfa::detail {

namespace {

struct Plans {
  fftw_plan forward = nullptr;
  fftw_plan backward = nullptr;
};

// Plans are never destroyed; there are at most ~log2(n) distinct sizes.
Plans plans_for(std::size_t size) {
  static std::mutex mutex;
  static std::map<std::size_t, Plans> cache;
  std::lock_guard lock(mutex);
  auto it = cache.find(size);
  if (it != cache.end()) return it->second;

  auto* buffer = fftw_alloc_complex(size);
  const int n = static_cast<int>(size);
  Plans p;
  p.forward = fftw_plan_dft_1d(n, buffer, buffer, FFTW_FORWARD, FFTW_ESTIMATE | FFTW_UNALIGNED);
  p.backward = fftw_plan_dft_1d(n, buffer, buffer, FFTW_BACKWARD, FFTW_ESTIMATE | FFTW_UNALIGNED);
  fftw_free(buffer);
  cache.emplace(size, p);
  return p;
}

fftw_complex* raw(std::vector<std::complex<double>>& v) {
  return reinterpret_cast<fftw_complex*>(v.data());
}

}  // namespace

std::vector<std::complex<double>> linear_convolution(std::span<const std::complex<double>> a,
                                                     std::span<const std::complex<double>> b,
                                                     std::size_t out_len) {
  std::vector<std::complex<double>> out(out_len);
  if (a.empty() || b.empty() || out_len == 0) return out;

  const std::size_t needed = std::min(out_len, a.size() + b.size() - 1);
  std::size_t size = 1;
  while (size < a.size() + b.size() - 1) size <<= 1;

  std::vector<std::complex<double>> fa(size), fb(size);
  std::copy(a.begin(), a.end(), fa.begin());
  std::copy(b.begin(), b.end(), fb.begin());

  const Plans plans = plans_for(size);
  fftw_execute_dft(plans.forward, raw(fa), raw(fa));
  fftw_execute_dft(plans.forward, raw(fb), raw(fb));
  for (std::size_t k = 0; k < size; ++k) fa[k] *= fb[k];
  fftw_execute_dft(plans.backward, raw(fa), raw(fa));

  const double inv = 1.0 / static_cast<double>(size);
  for (std::size_t k = 0; k < needed; ++k) out[k] = fa[k] * inv;
  return out;
}

}  // namespace echogfa::detail
