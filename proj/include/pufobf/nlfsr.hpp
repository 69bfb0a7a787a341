// Copyright pufobf contributors.
// Licensed under the Apache License, Version 2.0, see LICENSE for details.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <stdexcept>

#include "pufobf/bitstate.hpp"
#include "pufobf/feedback.hpp"

namespace pufobf {

// Which stage of the opposite register is XORed into a register's feedback.
//
// DroppedBit couples stage 0, the bit shifted out this cycle. With that
// choice each register alone is still a bijection but the combined pair map
// is 2-to-1: the two injected top bits then satisfy a fixed XOR relation, so
// half of the 2^56 states are unreachable after one step. Stage1 couples
// stage 1, which survives the shift, keeping the pair map a bijection.
// DroppedBit is the default.
enum class Coupling : uint8_t { DroppedBit, Stage1 };

// Two cross-coupled NLFSRs stepped in lockstep. Both next states are computed
// from the pre-step values, then written simultaneously.
struct NlfsrPair {
  BitState a;
  BitState b;
  FeedbackSpec spec_a;
  FeedbackSpec spec_b;
  Coupling coupling = Coupling::DroppedBit;

  static NlfsrPair make(const FeedbackSpec& spec_a, const FeedbackSpec& spec_b,
                        Coupling coupling, const BitState& a, const BitState& b) {
    if (!spec_a.quadratic_tap || !spec_b.quadratic_tap) {
      throw std::invalid_argument("NlfsrPair: both specs need a quadratic monomial");
    }
    if (a.width() != spec_a.width || b.width() != spec_b.width) {
      throw std::invalid_argument("NlfsrPair: state width does not match spec");
    }
    if (spec_a.width + spec_b.width > 64) {
      throw std::invalid_argument("NlfsrPair: combined width must fit in 64 bits");
    }
    return NlfsrPair{a, b, spec_a, spec_b, coupling};
  }
};

namespace detail {

inline uint64_t coupling_bit_raw(Coupling c, uint64_t other) {
  return c == Coupling::DroppedBit ? (other & 1u) : ((other >> 1) & 1u);
}

// Raw pair step on packed values, for hot loops. Specs must be valid.
inline void nlfsr_step_raw(const FeedbackSpec& sa, const FeedbackSpec& sb,
                           Coupling c, uint64_t& a, uint64_t& b) {
  uint64_t fa = feedback_bit_raw(sa, a) ^ coupling_bit_raw(c, b);
  uint64_t fb = feedback_bit_raw(sb, b) ^ coupling_bit_raw(c, a);
  a = (a >> 1) | (fa << (sa.width - 1));
  b = (b >> 1) | (fb << (sb.width - 1));
}

}  // namespace detail

inline NlfsrPair nlfsr_step(const NlfsrPair& p) {
  NlfsrPair n = p;
  uint64_t a = p.a.bits(), b = p.b.bits();
  detail::nlfsr_step_raw(p.spec_a, p.spec_b, p.coupling, a, b);
  n.a = BitState(p.spec_a.width, a);
  n.b = BitState(p.spec_b.width, b);
  return n;
}

inline NlfsrPair nlfsr_run(NlfsrPair p, uint64_t steps) {
  uint64_t a = p.a.bits(), b = p.b.bits();
  for (uint64_t i = 0; i < steps; ++i) {
    detail::nlfsr_step_raw(p.spec_a, p.spec_b, p.coupling, a, b);
  }
  p.a = BitState(p.spec_a.width, a);
  p.b = BitState(p.spec_b.width, b);
  return p;
}

// Packs the pair into one value: register A occupies the low stages,
// register B the stages above it.
inline BitState concat_state(const NlfsrPair& p) {
  unsigned w = p.spec_a.width + p.spec_b.width;
  return BitState(w, p.a.bits() | (p.b.bits() << p.spec_a.width));
}

// Loads a packed value produced by (or shaped like) concat_state.
inline NlfsrPair with_state(const NlfsrPair& p, const BitState& packed) {
  unsigned w = p.spec_a.width + p.spec_b.width;
  if (packed.width() != w) {
    throw std::invalid_argument("with_state: packed width does not match pair");
  }
  NlfsrPair n = p;
  n.a = BitState(p.spec_a.width, packed.bits() & BitState::mask_for(p.spec_a.width));
  n.b = BitState(p.spec_b.width, packed.bits() >> p.spec_a.width);
  return n;
}

}  // namespace pufobf
