// Copyright 2026 The tenseg Authors
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

#ifndef TENSEG_RNG_HPP_
#define TENSEG_RNG_HPP_

#include <cstdint>
#include <random>

namespace tenseg {

// splitmix64 step, used to hash seed components into independent streams.
inline std::uint64_t splitmix64(std::uint64_t& x) {
  x += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = x;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Deterministic per-task stream: identical regardless of scheduling order.
// Streams are derived from (seed, id0, id1, id2, id3), so parallel and serial
// execution of the same task grid draw identical randomness.
inline std::mt19937_64 make_stream(std::uint64_t seed, std::uint64_t id0 = 0,
                                   std::uint64_t id1 = 0, std::uint64_t id2 = 0,
                                   std::uint64_t id3 = 0) {
  std::uint64_t s = seed;
  std::uint64_t h = splitmix64(s);
  s ^= id0 * 0x9e3779b97f4a7c15ULL;
  h ^= splitmix64(s);
  s ^= id1 * 0xc2b2ae3d27d4eb4fULL;
  h ^= splitmix64(s);
  s ^= id2 * 0x165667b19e3779f9ULL;
  h ^= splitmix64(s);
  s ^= id3 * 0x27d4eb2f165667c5ULL;
  h ^= splitmix64(s);
  return std::mt19937_64(h);
}

}  // namespace tenseg

#endif  // TENSEG_RNG_HPP_
