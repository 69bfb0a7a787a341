// Copyright pufobf contributors.
// Licensed under the Apache License, Version 2.0, see LICENSE for details.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "pufobf/bitstate.hpp"
#include "pufobf/casr.hpp"
#include "pufobf/errors.hpp"
#include "pufobf/feedback.hpp"

namespace pufobf {

// Each output bit is the XOR of one fixed LFSR stage and one fixed CASR
// stage. The three pairs are disjoint on both sides so the outputs never
// share a stage. r1 and r2 feed the masked AND gadgets, r3 is the serial
// seed/utility stream.
struct PrngTaps {
  std::array<std::pair<unsigned, unsigned>, 3> outputs;  // (lfsr stage, casr stage)
};

struct PrngOutputs {
  bool r1, r2, r3;
  bool operator==(const PrngOutputs&) const = default;
};

// Lightweight pseudo-random generator: one maximum-length LFSR stepped next
// to one maximum-length rule-90/150 CASR. With the shipped 8 + 11 stage
// registers the joint state (and the output stream) repeats every
// 255 * 2047 = 521985 cycles, close to 2^19.
struct Prng {
  FeedbackSpec lfsr_spec;
  CasrRule casr_rule;
  PrngTaps taps;
  BitState lfsr;
  BitState casr;

  static Prng make(const FeedbackSpec& lfsr_spec, const CasrRule& casr_rule,
                   const PrngTaps& taps, const BitState& lfsr, const BitState& casr) {
    if (!lfsr_spec.is_linear()) {
      throw std::invalid_argument("Prng: LFSR spec must be linear");
    }
    if (lfsr.width() != lfsr_spec.width || casr.width() != casr_rule.width) {
      throw std::invalid_argument("Prng: register width does not match spec");
    }
    for (unsigned i = 0; i < 3; ++i) {
      auto [ls, cs] = taps.outputs[i];
      if (ls >= lfsr_spec.width || cs >= casr_rule.width) {
        throw std::invalid_argument("Prng: output tap out of range");
      }
      for (unsigned j = 0; j < i; ++j) {
        if (taps.outputs[j].first == ls || taps.outputs[j].second == cs) {
          throw std::invalid_argument("Prng: output tap pairs must be disjoint");
        }
      }
    }
    return Prng{lfsr_spec, casr_rule, taps, lfsr, casr};
  }
};

// Advances both registers one cycle and reads the outputs from the new state.
inline std::pair<PrngOutputs, Prng> prng_step(const Prng& p) {
  Prng n = p;
  n.lfsr = BitState(p.lfsr_spec.width, detail::shift_step_raw(p.lfsr_spec, p.lfsr.bits()));
  n.casr = BitState(p.casr_rule.width, detail::casr_step_raw(p.casr_rule, p.casr.bits()));
  PrngOutputs out{
      n.lfsr.bit(p.taps.outputs[0].first) != n.casr.bit(p.taps.outputs[0].second),
      n.lfsr.bit(p.taps.outputs[1].first) != n.casr.bit(p.taps.outputs[1].second),
      n.lfsr.bit(p.taps.outputs[2].first) != n.casr.bit(p.taps.outputs[2].second),
  };
  return {out, n};
}

// Registers packed from a serial seed stream, bit i of the stream landing in
// stage i: first the LFSR stages, then the CASR stages (8 + 11 = 19 bits for
// the shipped widths). Either register left all-zero makes the seed invalid.
struct PrngSeedOutcome {
  std::optional<Prng> prng;
  bool lfsr_zero = false;
  bool casr_zero = false;
};

inline PrngSeedOutcome prng_try_seed(const FeedbackSpec& lfsr_spec, const CasrRule& casr_rule,
                                     const PrngTaps& taps, const std::vector<uint8_t>& bits) {
  const unsigned wl = lfsr_spec.width, wc = casr_rule.width;
  if (bits.size() != wl + wc) {
    throw std::invalid_argument("prng_try_seed: seed stream length must equal total width");
  }
  uint64_t l = 0, c = 0;
  for (unsigned i = 0; i < wl; ++i) l |= uint64_t{bits[i] & 1u} << i;
  for (unsigned i = 0; i < wc; ++i) c |= uint64_t{bits[wl + i] & 1u} << i;
  PrngSeedOutcome out;
  out.lfsr_zero = l == 0;
  out.casr_zero = c == 0;
  if (!out.lfsr_zero && !out.casr_zero) {
    out.prng = Prng::make(lfsr_spec, casr_rule, taps, BitState(wl, l), BitState(wc, c));
  }
  return out;
}

inline Prng prng_seed(const FeedbackSpec& lfsr_spec, const CasrRule& casr_rule,
                      const PrngTaps& taps, const std::vector<uint8_t>& bits) {
  PrngSeedOutcome out = prng_try_seed(lfsr_spec, casr_rule, taps, bits);
  if (!out.prng) {
    throw SeedRejected(std::string("prng_seed: ") + (out.lfsr_zero ? "LFSR" : "CASR") +
                       " register seeded all-zero");
  }
  return *out.prng;
}

}  // namespace pufobf
