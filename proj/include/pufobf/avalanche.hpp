// Copyright pufobf contributors.
// Licensed under the Apache License, Version 2.0, see LICENSE for details.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cstdint>
#include <stdexcept>
#include <unordered_set>
#include <vector>

#include "pufobf/bitstate.hpp"
#include "pufobf/rng.hpp"

namespace pufobf {

// Flip-probability matrix of an obfuscating map: entry (i, j) estimates the
// probability that output bit j flips when input bit i is toggled, over
// uniformly random inputs under one fixed key. A cryptographically diffusing
// map sits at 1/2 everywhere; a linear map yields hard 0/1 entries.
struct AvalancheReport {
  unsigned width = 0;
  unsigned n_pairs = 0;
  std::vector<unsigned> toggle_bits;
  std::vector<double> p;  // row-major; row = toggled input bit, col = output bit

  double at(unsigned toggle_row, unsigned out_bit) const {
    return p[static_cast<size_t>(toggle_row) * width + out_bit];
  }

  double min_entry() const {
    double m = 1.0;
    for (double v : p) m = v < m ? v : m;
    return m;
  }

  double max_entry() const {
    double m = 0.0;
    for (double v : p) m = v > m ? v : m;
    return m;
  }
};

// Runs the map twice per pair, on a fresh unique challenge and on the same
// challenge with one input bit toggled, and tallies output flips. The key is
// drawn once up front and held fixed for the whole experiment.
//
// Obfuscator: callable (const BitState& key, const BitState& challenge) ->
// BitState of the same width.
template <typename Obfuscator>
AvalancheReport avalanche_test(Obfuscator&& obf, unsigned width, unsigned n_challenges,
                               std::vector<unsigned> toggle_bits, Rng& rng) {
  if (width == 0 || width > 64) {
    throw std::invalid_argument("avalanche_test: width must be in 1..64");
  }
  if (n_challenges < 1000) {
    throw std::invalid_argument("avalanche_test: need at least 1000 challenge pairs per bit");
  }
  if (width < 63 && n_challenges > (uint64_t{1} << (width - 1))) {
    throw std::invalid_argument(
        "avalanche_test: unique-challenge count exceeds half the challenge space");
  }
  if (toggle_bits.empty()) {
    toggle_bits.resize(width);
    for (unsigned i = 0; i < width; ++i) toggle_bits[i] = i;
  }
  for (unsigned t : toggle_bits) {
    if (t >= width) throw std::invalid_argument("avalanche_test: toggle bit out of range");
  }

  AvalancheReport rep;
  rep.width = width;
  rep.n_pairs = n_challenges;
  rep.toggle_bits = toggle_bits;
  rep.p.assign(static_cast<size_t>(toggle_bits.size()) * width, 0.0);

  const BitState key = random_state(width, rng);
  std::vector<uint32_t> flips(width);
  for (size_t row = 0; row < toggle_bits.size(); ++row) {
    std::fill(flips.begin(), flips.end(), 0u);
    std::unordered_set<uint64_t> seen;
    seen.reserve(n_challenges * 2);
    for (unsigned n = 0; n < n_challenges; ++n) {
      BitState c = random_state(width, rng);
      while (!seen.insert(c.bits()).second) c = random_state(width, rng);
      BitState base = obf(key, c);
      BitState toggled = obf(key, c.with_bit(toggle_bits[row], !c.bit(toggle_bits[row])));
      uint64_t diff = (base ^ toggled).bits();
      for (unsigned j = 0; j < width; ++j) flips[j] += (diff >> j) & 1u;
    }
    for (unsigned j = 0; j < width; ++j) {
      rep.p[row * width + j] = static_cast<double>(flips[j]) / n_challenges;
    }
  }
  return rep;
}

}  // namespace pufobf
