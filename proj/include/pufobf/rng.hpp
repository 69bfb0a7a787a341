// Copyright pufobf contributors.
// Licensed under the Apache License, Version 2.0, see LICENSE for details.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include "pufobf/bitstate.hpp"

namespace pufobf {

// Deterministic randomness for experiments. mt19937_64 is bit-exact across
// platforms; the distribution helpers below avoid std::*_distribution, whose
// output is implementation-defined, so recorded golden values stay portable.
using Rng = std::mt19937_64;

inline uint64_t splitmix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Seed for the idx-th independent substream of a base seed. Used to keep
// per-item randomness identical no matter how work is batched or ordered.
inline uint64_t substream_seed(uint64_t base, uint64_t idx) {
  return splitmix64(base ^ splitmix64(idx + 0x6a09e667f3bcc909ULL));
}

inline Rng make_rng(uint64_t seed) { return Rng(seed); }

// Uniform in (0, 1], 53-bit resolution. Never returns 0, safe under log().
inline double uniform01(Rng& rng) {
  return (static_cast<double>(rng() >> 11) + 1.0) * 0x1.0p-53;
}

// Standard normal via Box-Muller. No pair caching: one value per call so the
// draw count (and therefore every downstream value) is easy to reason about.
inline double gaussian(Rng& rng) {
  double u1 = uniform01(rng);
  double u2 = uniform01(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925287 * u2);
}

inline BitState random_state(unsigned width, Rng& rng) {
  return BitState(width, rng() & BitState::mask_for(width));
}

inline BitState random_nonzero_state(unsigned width, Rng& rng) {
  for (;;) {
    BitState s = random_state(width, rng);
    if (s.bits() != 0) return s;
  }
}

inline bool random_bit(Rng& rng) { return (rng() >> 40) & 1u; }

}  // namespace pufobf
