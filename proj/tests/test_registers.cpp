// Copyright pufobf contributors.
// Licensed under the Apache License, Version 2.0, see LICENSE for details.
// SPDX-License-Identifier: Apache-2.0

#include <set>

#include <catch2/catch_amalgamated.hpp>

#include "oracles.hpp"
#include "pufobf/casr.hpp"
#include "pufobf/feedback.hpp"
#include "pufobf/nlfsr.hpp"
#include "pufobf/period.hpp"
#include "pufobf/rng.hpp"

using pufobf::BitState;
using pufobf::CasrRule;
using pufobf::Coupling;
using pufobf::FeedbackSpec;
using pufobf::NlfsrPair;

namespace {

FeedbackSpec random_spec(unsigned width, bool with_quad, pufobf::Rng& rng) {
  std::vector<unsigned> taps{0};
  unsigned extras = 1 + static_cast<unsigned>(rng() % 4);
  for (unsigned k = 0; k < extras; ++k) taps.push_back(1 + static_cast<unsigned>(rng() % (width - 1)));
  std::optional<std::pair<unsigned, unsigned>> quad;
  if (with_quad) {
    unsigned i = 1 + static_cast<unsigned>(rng() % (width - 2));
    unsigned j = i + 1 + static_cast<unsigned>(rng() % (width - 1 - i));
    quad = std::make_pair(i, j);
  }
  return FeedbackSpec::make(width, taps, quad);
}

}  // namespace

TEST_CASE("FeedbackSpec validation", "[feedback]") {
  CHECK_THROWS_AS(FeedbackSpec::make(8, {1, 2}, std::nullopt), std::invalid_argument);   // no stage 0
  CHECK_THROWS_AS(FeedbackSpec::make(8, {0, 8}, std::nullopt), std::invalid_argument);   // tap range
  CHECK_THROWS_AS(FeedbackSpec::make(8, {0}, std::make_pair(0u, 3u)), std::invalid_argument);
  CHECK_THROWS_AS(FeedbackSpec::make(8, {0}, std::make_pair(3u, 3u)), std::invalid_argument);
  CHECK_THROWS_AS(FeedbackSpec::make(8, {0}, std::make_pair(3u, 8u)), std::invalid_argument);
  FeedbackSpec s = FeedbackSpec::make(8, {3, 0, 3}, std::make_pair(2u, 5u));
  CHECK(s.linear_taps == std::vector<unsigned>{0, 3});
  CHECK(s.linear_mask == 0b1001);
  CHECK_FALSE(s.is_linear());
}

TEST_CASE("lfsr_step matches the bit-level oracle", "[feedback][oracle]") {
  pufobf::Rng rng = pufobf::make_rng(11);
  for (int trial = 0; trial < 500; ++trial) {
    unsigned width = 2 + static_cast<unsigned>(rng() % 28);
    FeedbackSpec spec = random_spec(width, false, rng);
    BitState s = pufobf::random_state(width, rng);
    BitState stepped = pufobf::lfsr_step(spec, s);
    auto expect = oracle::lfsr_step(oracle::to_bits(s.bits(), width), spec.linear_taps);
    REQUIRE(stepped.bits() == oracle::from_bits(expect));
  }
}

TEST_CASE("lfsr_step contract checks", "[feedback]") {
  FeedbackSpec lin = FeedbackSpec::make(8, {0, 2}, std::nullopt);
  FeedbackSpec quad = FeedbackSpec::make(8, {0, 2}, std::make_pair(1u, 3u));
  CHECK_THROWS_AS(pufobf::lfsr_step(quad, BitState(8, 1)), std::invalid_argument);
  CHECK_THROWS_AS(pufobf::lfsr_step(lin, BitState(9, 1)), std::invalid_argument);
}

TEST_CASE("linear specs act linearly and fix zero", "[feedback]") {
  pufobf::Rng rng = pufobf::make_rng(13);
  for (int trial = 0; trial < 100; ++trial) {
    unsigned width = 3 + static_cast<unsigned>(rng() % 27);
    FeedbackSpec spec = random_spec(width, false, rng);
    CHECK(pufobf::lfsr_step(spec, BitState::zero(width)).bits() == 0);
    BitState x = pufobf::random_state(width, rng);
    BitState y = pufobf::random_state(width, rng);
    CHECK(pufobf::lfsr_step(spec, x ^ y) ==
          (pufobf::lfsr_step(spec, x) ^ pufobf::lfsr_step(spec, y)));
  }
}

TEST_CASE("standalone register step is a bijection (exhaustive, small widths)", "[feedback]") {
  pufobf::Rng rng = pufobf::make_rng(17);
  for (unsigned width : {3u, 5u, 6u, 8u}) {
    for (int trial = 0; trial < 10; ++trial) {
      FeedbackSpec spec = random_spec(width, trial % 2 == 0, rng);
      std::set<uint64_t> images;
      for (uint64_t v = 0; v < (uint64_t{1} << width); ++v) {
        images.insert(pufobf::detail::shift_step_raw(spec, v));
      }
      REQUIRE(images.size() == (uint64_t{1} << width));
    }
  }
}

TEST_CASE("casr_step matches the bit-level oracle and honors null boundaries", "[casr][oracle]") {
  // width 3, all rule 90: 100 -> 010 (left/right neighbours only).
  CasrRule r3 = CasrRule::make({90, 90, 90});
  CHECK(pufobf::casr_step(r3, BitState(3, 0b100)).bits() == 0b010);

  // width 1, rule 90: both neighbours are the null boundary, so always 0.
  CasrRule r1 = CasrRule::make({90});
  CHECK(pufobf::casr_step(r1, BitState(1, 1)).bits() == 0);
  CHECK(pufobf::casr_step(r1, BitState(1, 0)).bits() == 0);

  pufobf::Rng rng = pufobf::make_rng(19);
  for (int trial = 0; trial < 500; ++trial) {
    unsigned width = 1 + static_cast<unsigned>(rng() % 24);
    std::vector<uint8_t> rules(width);
    for (auto& c : rules) c = pufobf::random_bit(rng) ? 150 : 90;
    CasrRule rule = CasrRule::make(rules);
    BitState s = pufobf::random_state(width, rng);
    auto expect = oracle::casr_step(oracle::to_bits(s.bits(), width), rules);
    REQUIRE(pufobf::casr_step(rule, s).bits() == oracle::from_bits(expect));
  }
  CHECK_THROWS_AS(CasrRule::make({90, 91}), std::invalid_argument);
  CHECK_THROWS_AS(pufobf::casr_step(r3, BitState(4, 0)), std::invalid_argument);
}

TEST_CASE("nlfsr pair step matches the bit-level oracle", "[nlfsr][oracle]") {
  pufobf::Rng rng = pufobf::make_rng(23);
  for (int trial = 0; trial < 500; ++trial) {
    unsigned wa = 4 + static_cast<unsigned>(rng() % 26);
    unsigned wb = 4 + static_cast<unsigned>(rng() % 26);
    FeedbackSpec sa = random_spec(wa, true, rng);
    FeedbackSpec sb = random_spec(wb, true, rng);
    Coupling c = (trial % 2 == 0) ? Coupling::DroppedBit : Coupling::Stage1;
    NlfsrPair p = NlfsrPair::make(sa, sb, c, pufobf::random_state(wa, rng),
                                  pufobf::random_state(wb, rng));
    NlfsrPair stepped = pufobf::nlfsr_step(p);
    auto [ea, eb] = oracle::nlfsr_pair_step(
        oracle::to_bits(p.a.bits(), wa), oracle::to_bits(p.b.bits(), wb),
        sa.linear_taps, *sa.quadratic_tap, sb.linear_taps, *sb.quadratic_tap,
        c == Coupling::DroppedBit ? 0u : 1u);
    REQUIRE(stepped.a.bits() == oracle::from_bits(ea));
    REQUIRE(stepped.b.bits() == oracle::from_bits(eb));
  }
}

TEST_CASE("pair step with linear specs decomposes into lfsr steps plus coupling", "[nlfsr]") {
  pufobf::Rng rng = pufobf::make_rng(29);
  FeedbackSpec sa = random_spec(9, false, rng);
  FeedbackSpec sb = random_spec(12, false, rng);
  for (int trial = 0; trial < 200; ++trial) {
    uint64_t a = rng() & 0x1FF, b = rng() & 0xFFF;
    uint64_t ca = a, cb = b;
    pufobf::detail::nlfsr_step_raw(sa, sb, Coupling::Stage1, ca, cb);
    uint64_t ea = pufobf::lfsr_step(sa, BitState(9, a)).bits() ^ (((b >> 1) & 1) << 8);
    uint64_t eb = pufobf::lfsr_step(sb, BitState(12, b)).bits() ^ (((a >> 1) & 1) << 11);
    REQUIRE(ca == ea);
    REQUIRE(cb == eb);
  }
}

TEST_CASE("zero is a fixed point of the pair step", "[nlfsr]") {
  pufobf::Rng rng = pufobf::make_rng(31);
  FeedbackSpec sa = random_spec(27, true, rng);
  FeedbackSpec sb = random_spec(29, true, rng);
  NlfsrPair p = NlfsrPair::make(sa, sb, Coupling::DroppedBit, BitState::zero(27), BitState::zero(29));
  NlfsrPair q = pufobf::nlfsr_run(p, 100);
  CHECK(q.a.bits() == 0);
  CHECK(q.b.bits() == 0);
}

TEST_CASE("concat and load round trip", "[nlfsr]") {
  pufobf::Rng rng = pufobf::make_rng(37);
  FeedbackSpec sa = random_spec(27, true, rng);
  FeedbackSpec sb = random_spec(29, true, rng);
  BitState a = pufobf::random_state(27, rng), b = pufobf::random_state(29, rng);
  NlfsrPair p = NlfsrPair::make(sa, sb, Coupling::DroppedBit, a, b);
  BitState packed = pufobf::concat_state(p);
  CHECK(packed.width() == 56);
  for (unsigned i = 0; i < 27; ++i) CHECK(packed.bit(i) == a.bit(i));
  for (unsigned i = 0; i < 29; ++i) CHECK(packed.bit(27 + i) == b.bit(i));
  NlfsrPair q = pufobf::with_state(p, packed);
  CHECK(q.a == a);
  CHECK(q.b == b);
  CHECK_THROWS_AS(pufobf::with_state(p, BitState::zero(55)), std::invalid_argument);
}

TEST_CASE("dropped-bit coupling makes the pair map 2-to-1, stage-1 keeps it bijective",
          "[nlfsr]") {
  pufobf::Rng rng = pufobf::make_rng(41);
  FeedbackSpec sa = random_spec(5, true, rng);
  FeedbackSpec sb = random_spec(6, true, rng);
  for (Coupling c : {Coupling::DroppedBit, Coupling::Stage1}) {
    std::set<uint64_t> images;
    for (uint64_t v = 0; v < (uint64_t{1} << 11); ++v) {
      uint64_t a = v & 0x1F, b = v >> 5;
      pufobf::detail::nlfsr_step_raw(sa, sb, c, a, b);
      images.insert(a | (b << 5));
    }
    if (c == Coupling::Stage1) {
      CHECK(images.size() == (uint64_t{1} << 11));
    } else {
      CHECK(images.size() == (uint64_t{1} << 10));
    }
  }
}

TEST_CASE("verify_period matches known primitive polynomials", "[period]") {
  // x^3 + x + 1 and x^4 + x + 1 are primitive.
  CHECK(pufobf::verify_period(FeedbackSpec::make(3, {0, 1}, std::nullopt)) == 7);
  CHECK(pufobf::verify_period(FeedbackSpec::make(4, {0, 1}, std::nullopt)) == 15);
  // x^4 + x^2 + 1 = (x^2 + x + 1)^2 is not.
  CHECK(pufobf::verify_period(FeedbackSpec::make(4, {0, 2}, std::nullopt)) < 15);
  CHECK_THROWS_AS(pufobf::verify_period(FeedbackSpec::make(30, {0, 1}, std::nullopt)),
                  std::invalid_argument);
}

TEST_CASE("walk and algebraic max-length tests agree on random linear specs",
          "[period][oracle]") {
  pufobf::Rng rng = pufobf::make_rng(43);
  int max_len_seen = 0;
  for (int trial = 0; trial < 300; ++trial) {
    unsigned width = 4 + static_cast<unsigned>(rng() % 11);
    FeedbackSpec spec = random_spec(width, false, rng);
    bool walk_says = pufobf::verify_period(spec) == pufobf::max_period(width);
    bool algebra_says = pufobf::lfsr_spec_is_max_length(spec);
    REQUIRE(walk_says == algebra_says);
    max_len_seen += walk_says ? 1 : 0;
  }
  CHECK(max_len_seen > 0);  // the comparison actually exercised both outcomes
}

TEST_CASE("nlfsr search finds a maximum-length register at width 7", "[period]") {
  auto r = pufobf::find_max_length_nlfsr(7, 5000, 99);
  CHECK(r.period == 127);
  CHECK(pufobf::verify_period(r.spec) == 127);
  CHECK(r.spec.quadratic_tap.has_value());
  // Reproducible: same seed and budget give the identical spec.
  auto r2 = pufobf::find_max_length_nlfsr(7, 5000, 99);
  CHECK(r2.spec.linear_taps == r.spec.linear_taps);
  CHECK(r2.spec.quadratic_tap == r.spec.quadratic_tap);
  CHECK(r2.trials_used == r.trials_used);
}

TEST_CASE("lfsr and casr searches find maximum-length registers", "[period]") {
  auto l = pufobf::find_max_length_lfsr(8, 5000, 7);
  CHECK(l.period == 255);
  CHECK(pufobf::verify_period(l.spec) == 255);
  CHECK(pufobf::lfsr_spec_is_max_length(l.spec));

  auto c = pufobf::find_max_length_casr(5, 5000, 7);
  CHECK(c.period == 31);
  CHECK(pufobf::verify_period(c.rule) == 31);

  CHECK_THROWS_AS(pufobf::find_max_length_nlfsr(7, 1, 1234567), pufobf::TrialsExhausted);
}

TEST_CASE("primitivity test accepts a known degree-56 polynomial family member", "[period]") {
  // Dual route at width 16 first: x^16 + x^5 + x^3 + x^2 + 1 is primitive.
  FeedbackSpec w16 = FeedbackSpec::make(16, {0, 2, 3, 5}, std::nullopt);
  CHECK(pufobf::lfsr_spec_is_max_length(w16));
  CHECK(pufobf::verify_period(w16) == 65535);
  // And a reducible one: x^16 + x^2 + 1 = (x^8 + x + 1)^2.
  CHECK_FALSE(pufobf::lfsr_spec_is_max_length(FeedbackSpec::make(16, {0, 2}, std::nullopt)));
  // The width-56 search used for the avalanche control register.
  auto r = pufobf::find_max_length_lfsr(56, 20000, 7);
  CHECK(r.period == pufobf::max_period(56));
  CHECK(pufobf::lfsr_spec_is_max_length(r.spec));
}
