// Copyright pufobf contributors.
// Licensed under the Apache License, Version 2.0, see LICENSE for details.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <utility>

#include "pufobf/bitstate.hpp"
#include "pufobf/feedback.hpp"

namespace pufobf {

// Randomized clock gate. Each reference-clock tick steps a private copy of
// the generator LFSR and suppresses the consumer clock whenever a designated
// stage of the new state is set. A maximum-length w-stage LFSR has 2^(w-1)
// ones per period in every stage, so exactly half of all ticks are skipped
// (128 of 255 for the shipped 8-stage register). Disabled, every tick passes
// through and the LFSR holds still.
struct ClockRandomizer {
  bool enabled = false;
  FeedbackSpec lfsr_spec;
  unsigned skip_stage = 0;
  BitState lfsr;

  static ClockRandomizer make(bool enabled, const FeedbackSpec& spec, unsigned skip_stage,
                              const BitState& initial) {
    if (!spec.is_linear()) {
      throw std::invalid_argument("ClockRandomizer: spec must be linear");
    }
    if (skip_stage >= spec.width) {
      throw std::invalid_argument("ClockRandomizer: skip stage out of range");
    }
    if (initial.width() != spec.width) {
      throw std::invalid_argument("ClockRandomizer: state width does not match spec");
    }
    return ClockRandomizer{enabled, spec, skip_stage, initial};
  }
};

// One reference tick. Returns whether the consumer clock fires this tick.
inline std::pair<bool, ClockRandomizer> clock_tick(const ClockRandomizer& c) {
  if (!c.enabled) return {true, c};
  ClockRandomizer n = c;
  n.lfsr = BitState(c.lfsr_spec.width, detail::shift_step_raw(c.lfsr_spec, c.lfsr.bits()));
  return {!n.lfsr.bit(c.skip_stage), n};
}

}  // namespace pufobf
