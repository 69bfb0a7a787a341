// Copyright pufobf contributors.
// Licensed under the Apache License, Version 2.0, see LICENSE for details.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <vector>

namespace pufobf {

// Register banks whose writes are visible to the power model.
enum class Bank : uint8_t { Nlfsr, Share1, Share2, PrngLfsr, PrngCasr, ClockLfsr };

// One register write: the bank held `before` and was clocked to `after`
// during reference cycle `ref_cycle`. Cycles without a write for a bank mean
// the bank held its value (clock gated off or bank not present).
struct WriteRec {
  uint32_t ref_cycle = 0;
  Bank bank = Bank::Nlfsr;
  uint8_t width = 0;
  uint64_t before = 0;
  uint64_t after = 0;
};

// Complete record of one evaluation run on the reference-clock timeline.
// enabled_cycles counts consumer-bank actions (steps and loads), which is
// deterministic per schedule; ref_cycles additionally counts skipped edges
// and is randomized when the clock randomizer is enabled.
struct EvalTranscript {
  std::vector<WriteRec> writes;
  std::vector<uint8_t> responses;
  uint32_t ref_cycles = 0;
  uint32_t enabled_cycles = 0;
  bool zero_state = false;  // key xor challenge hit the all-zero fixed point
};

}  // namespace pufobf
