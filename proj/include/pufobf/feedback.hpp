// Copyright pufobf contributors.
// Licensed under the Apache License, Version 2.0, see LICENSE for details.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <bit>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "pufobf/bitstate.hpp"

namespace pufobf {

// Feedback for one Fibonacci-style shift register:
//
//   f(x) = x0 XOR (XOR of linear taps) XOR (x_q1 AND x_q2)
//
// Stage 0 is always a linear tap, which makes the standalone register step a
// bijection: the shifted-out bit can be recovered from the successor state.
// At most one quadratic monomial; a spec without one describes an LFSR.
struct FeedbackSpec {
  unsigned width = 0;
  std::vector<unsigned> linear_taps;                            // sorted, unique, contains 0
  std::optional<std::pair<unsigned, unsigned>> quadratic_tap;   // i < j, both >= 1
  uint64_t linear_mask = 0;                                     // derived from linear_taps

  static FeedbackSpec make(unsigned width, std::vector<unsigned> linear_taps,
                           std::optional<std::pair<unsigned, unsigned>> quadratic_tap) {
    if (width < 1 || width > 64) {
      throw std::invalid_argument("FeedbackSpec: width must be in [1, 64]");
    }
    FeedbackSpec spec;
    spec.width = width;
    std::sort(linear_taps.begin(), linear_taps.end());
    linear_taps.erase(std::unique(linear_taps.begin(), linear_taps.end()), linear_taps.end());
    if (linear_taps.empty() || linear_taps.front() != 0) {
      throw std::invalid_argument("FeedbackSpec: stage 0 must be a linear tap");
    }
    if (linear_taps.back() >= width) {
      throw std::invalid_argument("FeedbackSpec: linear tap out of range");
    }
    for (unsigned t : linear_taps) spec.linear_mask |= uint64_t{1} << t;
    spec.linear_taps = std::move(linear_taps);
    if (quadratic_tap) {
      auto [i, j] = *quadratic_tap;
      if (i < 1 || i >= j || j >= width) {
        throw std::invalid_argument("FeedbackSpec: quadratic tap must satisfy 1 <= i < j < width");
      }
      spec.quadratic_tap = quadratic_tap;
    }
    return spec;
  }

  bool is_linear() const { return !quadratic_tap.has_value(); }
};

namespace detail {

// Feedback bit for a raw state value. Assumes the spec is valid and the state
// fits the width; used by the hot loops (period walks, avalanche sweeps).
inline uint64_t feedback_bit_raw(const FeedbackSpec& spec, uint64_t s) {
  uint64_t f = static_cast<uint64_t>(std::popcount(s & spec.linear_mask)) & 1u;
  if (spec.quadratic_tap) {
    f ^= (s >> spec.quadratic_tap->first) & (s >> spec.quadratic_tap->second) & 1u;
  }
  return f;
}

// One shift-down step with feedback injected at the top stage.
inline uint64_t shift_step_raw(const FeedbackSpec& spec, uint64_t s) {
  return (s >> 1) | (feedback_bit_raw(spec, s) << (spec.width - 1));
}

}  // namespace detail

// One LFSR step. The spec must be purely linear.
inline BitState lfsr_step(const FeedbackSpec& spec, const BitState& s) {
  if (!spec.is_linear()) {
    throw std::invalid_argument("lfsr_step: spec has a quadratic monomial");
  }
  if (s.width() != spec.width) {
    throw std::invalid_argument("lfsr_step: state width does not match spec");
  }
  return BitState(spec.width, detail::shift_step_raw(spec, s.bits()));
}

inline BitState lfsr_run(const FeedbackSpec& spec, BitState s, uint64_t steps) {
  if (!spec.is_linear()) {
    throw std::invalid_argument("lfsr_run: spec has a quadratic monomial");
  }
  if (s.width() != spec.width) {
    throw std::invalid_argument("lfsr_run: state width does not match spec");
  }
  uint64_t v = s.bits();
  for (uint64_t i = 0; i < steps; ++i) v = detail::shift_step_raw(spec, v);
  return BitState(spec.width, v);
}

}  // namespace pufobf
