// Copyright pufobf contributors.
// Licensed under the Apache License, Version 2.0, see LICENSE for details.
// SPDX-License-Identifier: Apache-2.0
#include <catch2/catch_amalgamated.hpp>

#include "oracles.hpp"
#include "pufobf/clockrand.hpp"
#include "pufobf/period.hpp"
#include "pufobf/rng.hpp"

using namespace pufobf;

TEST_CASE("clock randomizer construction validates its inputs") {
  auto spec = FeedbackSpec::make(8, {0, 4, 5, 6}, std::nullopt);
  CHECK_NOTHROW(ClockRandomizer::make(true, spec, 0, BitState(8, 1)));
  CHECK_THROWS_AS(ClockRandomizer::make(true, spec, 8, BitState(8, 1)), std::invalid_argument);
  CHECK_THROWS_AS(ClockRandomizer::make(true, spec, 0, BitState(7, 1)), std::invalid_argument);
  auto nonlinear = FeedbackSpec::make(8, {0, 4}, std::pair<unsigned, unsigned>{2, 5});
  CHECK_THROWS_AS(ClockRandomizer::make(true, nonlinear, 0, BitState(8, 1)),
                  std::invalid_argument);
}

TEST_CASE("disabled randomizer passes every tick and holds its state") {
  auto spec = FeedbackSpec::make(8, {0, 4, 5, 6}, std::nullopt);
  ClockRandomizer c = ClockRandomizer::make(false, spec, 0, BitState(8, 0x5a));
  for (int i = 0; i < 50; ++i) {
    auto [fire, next] = clock_tick(c);
    REQUIRE(fire);
    REQUIRE(next.lfsr.bits() == 0x5a);
    c = next;
  }
}

TEST_CASE("enabled randomizer follows the LFSR oracle and skips on the set stage") {
  Rng rng(0xc10c);
  for (int trial = 0; trial < 40; ++trial) {
    unsigned w = 3 + static_cast<unsigned>(rng() % 10);
    std::vector<unsigned> taps{0};
    for (unsigned t = 1; t < w; ++t) {
      if (random_bit(rng)) taps.push_back(t);
    }
    auto spec = FeedbackSpec::make(w, taps, std::nullopt);
    unsigned stage = static_cast<unsigned>(rng() % w);
    ClockRandomizer c = ClockRandomizer::make(true, spec, stage, random_nonzero_state(w, rng));

    oracle::Bits s = oracle::to_bits(c.lfsr.bits(), w);
    for (int i = 0; i < 200; ++i) {
      auto [fire, next] = clock_tick(c);
      s = oracle::lfsr_step(s, spec.linear_taps);
      REQUIRE(next.lfsr.bits() == oracle::from_bits(s));
      REQUIRE(fire == (s[stage] == 0));
      c = next;
    }
  }
}

TEST_CASE("maximum-length randomizer skips exactly half of all ticks") {
  // Every stage of a maximum-length w-stage LFSR holds 2^(w-1) ones per
  // period, so 255 reference ticks yield exactly 128 skips.
  auto spec = FeedbackSpec::make(8, {0, 4, 5, 6}, std::nullopt);
  REQUIRE(verify_period(spec) == 255);

  ClockRandomizer c = ClockRandomizer::make(true, spec, 0, BitState(8, 0x01));
  int fired = 0, skipped = 0;
  for (int i = 0; i < 255; ++i) {
    auto [fire, next] = clock_tick(c);
    (fire ? fired : skipped) += 1;
    c = next;
  }
  CHECK(fired == 127);
  CHECK(skipped == 128);
  CHECK(c.lfsr.bits() == 0x01);  // full period brings the gate back around
}
