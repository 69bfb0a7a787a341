// Copyright pufobf contributors.
// Licensed under the Apache License, Version 2.0, see LICENSE for details.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "pufobf/bitstate.hpp"

namespace pufobf {

// One-dimensional hybrid cellular automaton shift register with null
// boundaries. Each cell runs rule 90 (left XOR right) or rule 150
// (left XOR self XOR right); out-of-range neighbours read as 0.
struct CasrRule {
  unsigned width = 0;
  std::vector<uint8_t> rules;   // per cell, 90 or 150
  uint64_t rule150_mask = 0;    // derived: bit i set iff cell i runs rule 150

  static CasrRule make(std::vector<uint8_t> rules) {
    if (rules.empty() || rules.size() > 64) {
      throw std::invalid_argument("CasrRule: width must be in [1, 64]");
    }
    CasrRule r;
    r.width = static_cast<unsigned>(rules.size());
    for (unsigned i = 0; i < r.width; ++i) {
      if (rules[i] == 150) {
        r.rule150_mask |= uint64_t{1} << i;
      } else if (rules[i] != 90) {
        throw std::invalid_argument("CasrRule: every cell must be rule 90 or 150");
      }
    }
    r.rules = std::move(rules);
    return r;
  }
};

namespace detail {

inline uint64_t casr_step_raw(const CasrRule& rule, uint64_t s) {
  // (s << 1) bit i is the left neighbour, (s >> 1) the right one; the final
  // mask implements the null boundary on both ends.
  return ((s << 1) ^ (s >> 1) ^ (s & rule.rule150_mask)) & BitState::mask_for(rule.width);
}

}  // namespace detail

inline BitState casr_step(const CasrRule& rule, const BitState& s) {
  if (s.width() != rule.width) {
    throw std::invalid_argument("casr_step: state width does not match rule");
  }
  return BitState(rule.width, detail::casr_step_raw(rule, s.bits()));
}

}  // namespace pufobf
