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
#include <random>
#include <string_view>

namespace echogfa::rng {

using Engine = std::mt19937_64;

constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// 64-bit FNV-1a.
constexpr std::uint64_t fnv1a(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : text) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Counter-based sub-stream id: a pure function of its three inputs, so
/// realizations can be drawn in any order on any worker.
constexpr std::uint64_t stream_seed(std::uint64_t master_seed, std::uint64_t index,
                                    std::string_view purpose) {
  std::uint64_t h = splitmix64(master_seed);
  h = splitmix64(h ^ index);
  return splitmix64(h ^ fnv1a(purpose));
}

inline Engine make_stream(std::uint64_t master_seed, std::uint64_t index,
                          std::string_view purpose) {
  return Engine(stream_seed(master_seed, index, purpose));
}

}  // namespace echogfa::rng
