// Copyright pufobf contributors.
// Licensed under the Apache License, Version 2.0, see LICENSE for details.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <bit>
#include <cstdint>
#include <stdexcept>

#include "pufobf/bitstate.hpp"
#include "pufobf/feedback.hpp"
#include "pufobf/nlfsr.hpp"

namespace pufobf {

// First-order Boolean masking: a value x is held as two shares with
// x = s1 XOR s2, and no wire ever carries x itself until unmask.
struct SharePair {
  uint8_t s1, s2;
  bool operator==(const SharePair&) const = default;
};

inline SharePair mask_bit(uint8_t v, uint8_t r) {
  return SharePair{static_cast<uint8_t>((v ^ r) & 1u), static_cast<uint8_t>(r & 1u)};
}

inline uint8_t unmask_bit(SharePair p) { return (p.s1 ^ p.s2) & 1u; }

// Domain-oriented masked AND. The cross terms a1&b2 and a2&b1 are blinded by
// one fresh bit r before they join their domains, so every intermediate wire
// stays independent of the unshared inputs:
//
//   q1 = (a1 & b1) ^ ((a1 & b2) ^ r)
//   q2 = (a2 & b2) ^ ((a2 & b1) ^ r)
//
// r cancels in q1 ^ q2, leaving (a1^a2) & (b1^b2). The same r also lands once
// in each output share, which is what re-randomizes the register's share
// split every cycle; folding another copy of r into both outputs would cancel
// it right back out, so no separate remask stage exists.
inline SharePair dom_and(SharePair a, SharePair b, uint8_t r) {
  r &= 1u;
  uint8_t q1 = (a.s1 & b.s1) ^ ((a.s1 & b.s2) ^ r);
  uint8_t q2 = (a.s2 & b.s2) ^ ((a.s2 & b.s1) ^ r);
  return SharePair{static_cast<uint8_t>(q1 & 1u), static_cast<uint8_t>(q2 & 1u)};
}

// The cross-coupled register pair in two-share form. Shares use the same
// packed layout as concat_state: register A in the low stages, B above.
// Linear taps and the coupling bit act on each share independently; only the
// quadratic monomials need the dom_and gadget, one fresh bit per register
// per cycle.
struct MaskedPair {
  FeedbackSpec spec_a;
  FeedbackSpec spec_b;
  Coupling coupling = Coupling::DroppedBit;
  BitState share1;
  BitState share2;

  static MaskedPair make(const FeedbackSpec& spec_a, const FeedbackSpec& spec_b,
                         Coupling coupling, const BitState& share1, const BitState& share2) {
    if (!spec_a.quadratic_tap || !spec_b.quadratic_tap) {
      throw std::invalid_argument("MaskedPair: both specs need a quadratic monomial");
    }
    unsigned w = spec_a.width + spec_b.width;
    if (w > 64) {
      throw std::invalid_argument("MaskedPair: combined width must fit in 64 bits");
    }
    if (share1.width() != w || share2.width() != w) {
      throw std::invalid_argument("MaskedPair: share width does not match combined spec width");
    }
    return MaskedPair{spec_a, spec_b, coupling, share1, share2};
  }
};

inline MaskedPair mask_value(const FeedbackSpec& spec_a, const FeedbackSpec& spec_b,
                             Coupling coupling, const BitState& value, const BitState& mask) {
  return MaskedPair::make(spec_a, spec_b, coupling, value ^ mask, mask);
}

inline BitState unmask(const MaskedPair& m) { return m.share1 ^ m.share2; }

// One masked pair step. r1 feeds register A's gadget, r2 register B's.
inline MaskedPair masked_step(const MaskedPair& m, bool r1, bool r2) {
  const unsigned wa = m.spec_a.width, wb = m.spec_b.width;
  const uint64_t mask_a = BitState::mask_for(wa);
  uint64_t a1 = m.share1.bits() & mask_a, b1 = m.share1.bits() >> wa;
  uint64_t a2 = m.share2.bits() & mask_a, b2 = m.share2.bits() >> wa;

  auto [ai, aj] = *m.spec_a.quadratic_tap;
  auto [bi, bj] = *m.spec_b.quadratic_tap;
  SharePair qa = dom_and({static_cast<uint8_t>((a1 >> ai) & 1u), static_cast<uint8_t>((a2 >> ai) & 1u)},
                         {static_cast<uint8_t>((a1 >> aj) & 1u), static_cast<uint8_t>((a2 >> aj) & 1u)},
                         r1 ? 1u : 0u);
  SharePair qb = dom_and({static_cast<uint8_t>((b1 >> bi) & 1u), static_cast<uint8_t>((b2 >> bi) & 1u)},
                         {static_cast<uint8_t>((b1 >> bj) & 1u), static_cast<uint8_t>((b2 >> bj) & 1u)},
                         r2 ? 1u : 0u);

  uint64_t fa1 = (static_cast<uint64_t>(std::popcount(a1 & m.spec_a.linear_mask)) & 1u) ^ qa.s1 ^
                 detail::coupling_bit_raw(m.coupling, b1);
  uint64_t fa2 = (static_cast<uint64_t>(std::popcount(a2 & m.spec_a.linear_mask)) & 1u) ^ qa.s2 ^
                 detail::coupling_bit_raw(m.coupling, b2);
  uint64_t fb1 = (static_cast<uint64_t>(std::popcount(b1 & m.spec_b.linear_mask)) & 1u) ^ qb.s1 ^
                 detail::coupling_bit_raw(m.coupling, a1);
  uint64_t fb2 = (static_cast<uint64_t>(std::popcount(b2 & m.spec_b.linear_mask)) & 1u) ^ qb.s2 ^
                 detail::coupling_bit_raw(m.coupling, a2);

  a1 = (a1 >> 1) | (fa1 << (wa - 1));
  a2 = (a2 >> 1) | (fa2 << (wa - 1));
  b1 = (b1 >> 1) | (fb1 << (wb - 1));
  b2 = (b2 >> 1) | (fb2 << (wb - 1));

  MaskedPair n = m;
  n.share1 = BitState(wa + wb, a1 | (b1 << wa));
  n.share2 = BitState(wa + wb, a2 | (b2 << wa));
  return n;
}

// XOR of a public constant (a challenge word): one share absorbs it whole.
inline MaskedPair masked_xor_public(const MaskedPair& m, const BitState& v) {
  MaskedPair n = m;
  n.share1 = m.share1 ^ v;
  return n;
}

// XOR of a value that itself arrives in two shares (the key): share-wise,
// so the unshared value never appears.
inline MaskedPair masked_xor_shares(const MaskedPair& m, const BitState& v1, const BitState& v2) {
  MaskedPair n = m;
  n.share1 = m.share1 ^ v1;
  n.share2 = m.share2 ^ v2;
  return n;
}

// Serial load cycle: both shares shift down one stage and take the same bit
// at the top, so the shares converge on an identical random word and the
// shared value underneath stays zero.
inline MaskedPair masked_shift_in(const MaskedPair& m, bool bit) {
  unsigned w = m.spec_a.width + m.spec_b.width;
  uint64_t top = uint64_t{bit} << (w - 1);
  MaskedPair n = m;
  n.share1 = BitState(w, (m.share1.bits() >> 1) | top);
  n.share2 = BitState(w, (m.share2.bits() >> 1) | top);
  return n;
}

}  // namespace pufobf
