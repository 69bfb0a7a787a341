// Copyright pufobf contributors.
// Licensed under the Apache License, Version 2.0, see LICENSE for details.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "pufobf/apuf.hpp"
#include "pufobf/bitstate.hpp"
#include "pufobf/clockrand.hpp"
#include "pufobf/device.hpp"
#include "pufobf/errors.hpp"
#include "pufobf/masking.hpp"
#include "pufobf/nlfsr.hpp"
#include "pufobf/prng.hpp"
#include "pufobf/rng.hpp"
#include "pufobf/transcript.hpp"

namespace pufobf {

// Cycle budget of one evaluation. Warm-up diffuses the loaded value across
// the full register; each flush period emits one obfuscated challenge; the
// misalignment phase (masked flow only) runs the gated clock while the
// register value is still the all-zero fixed point, so it randomizes timing
// without touching the logical state sequence.
struct Schedule {
  unsigned warmup = 112;
  unsigned flush = 56;
  unsigned misalign = 128;
};

struct EvalResult {
  std::vector<uint8_t> responses;
  std::vector<BitState> obf_challenges;  // the PUF inputs, one per response
  EvalTranscript transcript;
};

// Deterministic obfuscated-challenge sequence: load key xor challenge, run
// warmup + flush cycles, then one more flush period per additional element.
inline std::vector<BitState> obfuscate(const FeedbackSpec& spec_a, const FeedbackSpec& spec_b,
                                       Coupling coupling, const BitState& key,
                                       const BitState& challenge, unsigned evals,
                                       const Schedule& sched = {}) {
  if (evals < 1) throw std::invalid_argument("obfuscate: need evals >= 1");
  unsigned w = spec_a.width + spec_b.width;
  if (key.width() != w || challenge.width() != w) {
    throw std::invalid_argument("obfuscate: key/challenge width must equal combined width");
  }
  BitState loaded = key ^ challenge;
  NlfsrPair p = NlfsrPair::make(
      spec_a, spec_b, coupling,
      BitState(spec_a.width, loaded.bits() & BitState::mask_for(spec_a.width)),
      BitState(spec_b.width, loaded.bits() >> spec_a.width));
  p = nlfsr_run(p, sched.warmup);
  std::vector<BitState> out;
  out.reserve(evals);
  for (unsigned i = 0; i < evals; ++i) {
    p = nlfsr_run(p, sched.flush);
    out.push_back(concat_state(p));
  }
  return out;
}

namespace detail {

// Register loads move over a byte-wide path: value installs take one enabled
// cycle per byte group, low bytes first, so load-cycle switching activity is
// the Hamming weight of one byte at a time.
inline unsigned byte_groups(unsigned width) { return (width + 7) / 8; }

inline uint64_t byte_group_mask(unsigned width, unsigned group) {
  return (uint64_t{0xff} << (8 * group)) & BitState::mask_for(width);
}

// Reference-clock walker: advances cycles (recording clock-randomizer
// register writes) until one fires, then reports that cycle's index so the
// caller can attach the consumer action performed on it.
struct Timeline {
  EvalTranscript* t;
  ClockRandomizer clk;

  uint32_t advance_to_enabled() {
    for (;;) {
      uint32_t cyc = t->ref_cycles++;
      auto [fire, next] = clock_tick(clk);
      if (clk.enabled) {
        t->writes.push_back({cyc, Bank::ClockLfsr, static_cast<uint8_t>(clk.lfsr_spec.width),
                             clk.lfsr.bits(), next.lfsr.bits()});
      }
      clk = next;
      if (fire) {
        ++t->enabled_cycles;
        return cyc;
      }
    }
  }
};

}  // namespace detail

// Algorithm 1: plain evaluation. Loads key xor challenge byte by byte (the
// side-channel target), diffuses, and emits voted responses. The clock
// randomizer may be enabled as a standalone countermeasure.
inline EvalResult evaluate_plain(const Device& d, const BitState& challenge, unsigned n_bits,
                                 Rng& rng, const Schedule& sched = {}) {
  if (d.cm.masking) throw ConfigMismatch("evaluate_plain: device is configured for masking");
  if (d.keystore.mode != KeyMode::PlainOtp) {
    throw ConfigMismatch("evaluate_plain: plain evaluation needs a plain key store");
  }
  if (challenge.width() != d.challenge_width()) {
    throw std::invalid_argument("evaluate_plain: challenge width mismatch");
  }
  if (n_bits < 1) throw std::invalid_argument("evaluate_plain: need n_bits >= 1");

  EvalResult res;
  res.transcript.writes.reserve(
      (detail::byte_groups(d.challenge_width()) + sched.warmup + (sched.flush + 1) * n_bits) *
      (d.cm.clock_randomization ? 3 : 1));
  detail::Timeline tl{&res.transcript,
                      ClockRandomizer::make(
                          d.cm.clock_randomization, d.prng_lfsr, d.clk_skip_stage,
                          d.cm.clock_randomization ? random_nonzero_state(d.prng_lfsr.width, rng)
                                                   : BitState(d.prng_lfsr.width, 1))};

  const unsigned w = d.challenge_width();
  BitState loaded = d.keystore.plain() ^ challenge;
  res.transcript.zero_state = loaded.bits() == 0;

  uint64_t partial = 0;
  for (unsigned g = 0; g < detail::byte_groups(w); ++g) {
    uint32_t cyc = tl.advance_to_enabled();
    uint64_t next = partial | (loaded.bits() & detail::byte_group_mask(w, g));
    res.transcript.writes.push_back({cyc, Bank::Nlfsr, static_cast<uint8_t>(w), partial, next});
    partial = next;
  }
  NlfsrPair p = NlfsrPair::make(
      d.spec_a, d.spec_b, d.coupling,
      BitState(d.spec_a.width, loaded.bits() & BitState::mask_for(d.spec_a.width)),
      BitState(d.spec_b.width, loaded.bits() >> d.spec_a.width));

  auto step_once = [&] {
    uint32_t c = tl.advance_to_enabled();
    uint64_t before = concat_state(p).bits();
    p = nlfsr_step(p);
    res.transcript.writes.push_back(
        {c, Bank::Nlfsr, static_cast<uint8_t>(w), before, concat_state(p).bits()});
  };

  for (unsigned i = 0; i < sched.warmup; ++i) step_once();
  for (unsigned bit = 0; bit < n_bits; ++bit) {
    for (unsigned i = 0; i < sched.flush; ++i) step_once();
    BitState obf = concat_state(p);
    res.obf_challenges.push_back(obf);
    res.responses.push_back(apuf_eval_voted(d.apuf, obf, d.votes, rng) ? 1u : 0u);
  }
  res.transcript.responses = res.responses;
  return res;
}

// Algorithm 2: masked, optionally clock-randomized evaluation.
//
// Order of operations: seed the PRNG from the device TRNG, enable the gated
// clock, serially load the same PRNG bit stream into both shares (unmasked
// value stays zero), run the misalignment cycles on the zero fixed point,
// then install the key share-wise and the public challenge into share one.
// Running the misalignment phase before the key XOR keeps the unmasked state
// sequence identical to the plain flow, which is the equivalence the rest of
// the artifact is built on.
//
// seed_bits, when given, replaces the TRNG draw (a noiseless device has no
// entropy source; injected seeds keep the flow testable in that limit).
inline EvalResult evaluate_masked(const Device& d, const BitState& challenge, unsigned n_bits,
                                  Rng& rng, const Schedule& sched = {},
                                  const std::vector<uint8_t>* seed_bits = nullptr) {
  if (!d.cm.masking) throw ConfigMismatch("evaluate_masked: device is not configured for masking");
  if (d.keystore.mode != KeyMode::SharedOtp) {
    throw ConfigMismatch("evaluate_masked: masked evaluation needs a two-share key store");
  }
  if (challenge.width() != d.challenge_width()) {
    throw std::invalid_argument("evaluate_masked: challenge width mismatch");
  }
  if (n_bits < 1) throw std::invalid_argument("evaluate_masked: need n_bits >= 1");
  if (!seed_bits && !d.enrollment) {
    throw ConfigMismatch("evaluate_masked: device has no enrolled seed challenge");
  }

  const unsigned wl = d.prng_lfsr.width, wc = d.prng_casr.width;
  std::vector<uint8_t> bits;
  if (seed_bits) {
    if (seed_bits->size() != wl + wc) {
      throw std::invalid_argument("evaluate_masked: injected seed length mismatch");
    }
    bits = *seed_bits;
  } else {
    bits = trng_bits(d.apuf, d.enrollment->unstable_challenge, wl + wc, rng);
  }
  PrngSeedOutcome seed = prng_try_seed(d.prng_lfsr, d.prng_casr, d.prng_taps, bits);
  for (unsigned redraw = 0; !seed.prng && !seed_bits && redraw < 8; ++redraw) {
    std::vector<uint8_t> fresh =
        trng_bits(d.apuf, d.enrollment->unstable_challenge,
                  (seed.lfsr_zero ? wl : 0) + (seed.casr_zero ? wc : 0), rng);
    unsigned at = 0;
    if (seed.lfsr_zero) {
      for (unsigned i = 0; i < wl; ++i) bits[i] = fresh[at++];
    }
    if (seed.casr_zero) {
      for (unsigned i = 0; i < wc; ++i) bits[wl + i] = fresh[at++];
    }
    seed = prng_try_seed(d.prng_lfsr, d.prng_casr, d.prng_taps, bits);
  }
  if (!seed.prng) {
    throw SeedRejected(std::string("evaluate_masked: ") + (seed.lfsr_zero ? "LFSR" : "CASR") +
                       " seed register all-zero after re-draw budget");
  }
  Prng prng = *seed.prng;

  EvalResult res;
  const unsigned w = d.challenge_width();
  const unsigned lead = w + sched.misalign + 2 * detail::byte_groups(w) + sched.warmup;
  res.transcript.writes.reserve((lead + (sched.flush + 1) * n_bits) * 5 + 8);

  // Power-up loads: PRNG registers take their seed, and the randomizer's
  // private LFSR starts from a copy of the PRNG LFSR state.
  res.transcript.writes.push_back(
      {0, Bank::PrngLfsr, static_cast<uint8_t>(wl), 0, prng.lfsr.bits()});
  res.transcript.writes.push_back(
      {0, Bank::PrngCasr, static_cast<uint8_t>(wc), 0, prng.casr.bits()});
  detail::Timeline tl{&res.transcript,
                      ClockRandomizer::make(d.cm.clock_randomization, d.prng_lfsr,
                                            d.clk_skip_stage, prng.lfsr)};
  if (d.cm.clock_randomization) {
    res.transcript.writes.push_back(
        {0, Bank::ClockLfsr, static_cast<uint8_t>(wl), 0, prng.lfsr.bits()});
  }
  res.transcript.ref_cycles = 1;

  MaskedPair m = mask_value(d.spec_a, d.spec_b, d.coupling, BitState::zero(w), BitState::zero(w));

  // One enabled cycle: step the PRNG, then apply `act` to the masked pair
  // with this cycle's fresh outputs, recording every register write.
  auto enabled_cycle = [&](auto&& act) {
    uint32_t c = tl.advance_to_enabled();
    auto [out, next] = prng_step(prng);
    res.transcript.writes.push_back(
        {c, Bank::PrngLfsr, static_cast<uint8_t>(wl), prng.lfsr.bits(), next.lfsr.bits()});
    res.transcript.writes.push_back(
        {c, Bank::PrngCasr, static_cast<uint8_t>(wc), prng.casr.bits(), next.casr.bits()});
    prng = next;
    uint64_t b1 = m.share1.bits(), b2 = m.share2.bits();
    act(out);
    if (m.share1.bits() != b1) {
      res.transcript.writes.push_back(
          {c, Bank::Share1, static_cast<uint8_t>(w), b1, m.share1.bits()});
    }
    if (m.share2.bits() != b2) {
      res.transcript.writes.push_back(
          {c, Bank::Share2, static_cast<uint8_t>(w), b2, m.share2.bits()});
    }
  };

  for (unsigned i = 0; i < w; ++i) {
    enabled_cycle([&](const PrngOutputs& o) { m = masked_shift_in(m, o.r3); });
  }
  for (unsigned i = 0; i < sched.misalign; ++i) {
    enabled_cycle([&](const PrngOutputs& o) { m = masked_step(m, o.r1, o.r2); });
  }
  for (unsigned g = 0; g < detail::byte_groups(w); ++g) {
    uint64_t gm = detail::byte_group_mask(w, g);
    enabled_cycle([&](const PrngOutputs&) {
      m = masked_xor_shares(m, BitState(w, d.keystore.s1.bits() & gm),
                            BitState(w, d.keystore.s2.bits() & gm));
    });
  }
  for (unsigned g = 0; g < detail::byte_groups(w); ++g) {
    uint64_t gm = detail::byte_group_mask(w, g);
    enabled_cycle(
        [&](const PrngOutputs&) { m = masked_xor_public(m, BitState(w, challenge.bits() & gm)); });
  }
  res.transcript.zero_state = (m.share1 ^ m.share2).bits() == 0;
  for (unsigned i = 0; i < sched.warmup; ++i) {
    enabled_cycle([&](const PrngOutputs& o) { m = masked_step(m, o.r1, o.r2); });
  }
  for (unsigned bit = 0; bit < n_bits; ++bit) {
    for (unsigned i = 0; i < sched.flush; ++i) {
      enabled_cycle([&](const PrngOutputs& o) { m = masked_step(m, o.r1, o.r2); });
    }
    // Warm-up is complete: this is the one place the shares recombine, and
    // the unmasked value goes straight to the PUF, never into a register.
    BitState obf = unmask(m);
    res.obf_challenges.push_back(obf);
    res.responses.push_back(apuf_eval_voted(d.apuf, obf, d.votes, rng) ? 1u : 0u);
  }
  res.transcript.responses = res.responses;
  return res;
}

// Enrollment: find a near-threshold challenge for TRNG seeding and measure
// the instance's uniformity; returns a copy of the device with the record
// installed.
inline Device enroll(Device d, unsigned trials, unsigned evals_per_trial, unsigned uniformity_n,
                     Rng& rng) {
  BitState unstable = find_unstable_challenge(d.apuf, trials, evals_per_trial, rng);
  double u = uniformity(d.apuf, uniformity_n, d.votes, rng);
  d.enrollment = Enrollment{unstable, u};
  return d;
}

}  // namespace pufobf
