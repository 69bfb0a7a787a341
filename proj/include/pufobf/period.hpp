// Copyright pufobf contributors.
// Licensed under the Apache License, Version 2.0, see LICENSE for details.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "pufobf/casr.hpp"
#include "pufobf/errors.hpp"
#include "pufobf/feedback.hpp"
#include "pufobf/rng.hpp"

namespace pufobf {

// Largest possible period of a w-stage register with an all-zero fixed point.
inline uint64_t max_period(unsigned width) {
  return (uint64_t{1} << width) - 1;
}

// Exhaustive period checks walk the whole orbit, so cap the width where brute
// force stays cheap; 2^29 steps is a few seconds, 2^30 starts to hurt.
inline constexpr unsigned kMaxWalkWidth = 29;

namespace detail {

template <typename StepFn>
uint64_t walk_period(unsigned width, StepFn step) {
  if (width > kMaxWalkWidth) {
    throw std::invalid_argument("verify_period: exhaustive walk capped at width 29");
  }
  const uint64_t start = 1;
  uint64_t s = start;
  uint64_t n = 0;
  const uint64_t bound = max_period(width);
  do {
    s = step(s);
    ++n;
  } while (s != start && n <= bound);
  return n;  // never exceeds bound: the step is a bijection fixing 0
}

}  // namespace detail

// Orbit length of state 000...01 under the standalone register step (no
// cross-coupling). Equals 2^width - 1 exactly when the register cycles
// through every nonzero state.
inline uint64_t verify_period(const FeedbackSpec& spec) {
  return detail::walk_period(spec.width,
                             [&](uint64_t s) { return detail::shift_step_raw(spec, s); });
}

inline uint64_t verify_period(const CasrRule& rule) {
  return detail::walk_period(rule.width,
                             [&](uint64_t s) { return detail::casr_step_raw(rule, s); });
}

// ---------------------------------------------------------------------------
// Algebraic maximum-length test for LFSRs, usable beyond the walk cap.
// The characteristic polynomial of the tap set T is p(x) = x^w + sum x^i over
// i in T; the register is maximum-length iff p is primitive, i.e. the order
// of x in GF(2)[x]/p is exactly 2^w - 1.

namespace detail {

inline uint64_t mulmod_u64(uint64_t a, uint64_t b, uint64_t m) {
  return static_cast<uint64_t>((static_cast<__uint128_t>(a) * b) % m);
}

inline uint64_t powmod_u64(uint64_t b, uint64_t e, uint64_t m) {
  uint64_t r = 1 % m;
  b %= m;
  while (e) {
    if (e & 1) r = mulmod_u64(r, b, m);
    b = mulmod_u64(b, b, m);
    e >>= 1;
  }
  return r;
}

inline bool is_prime_u64(uint64_t n) {
  if (n < 2) return false;
  for (uint64_t p : {2ull, 3ull, 5ull, 7ull, 11ull, 13ull, 17ull, 19ull, 23ull, 29ull, 31ull, 37ull}) {
    if (n % p == 0) return n == p;
  }
  uint64_t d = n - 1;
  int r = 0;
  while ((d & 1) == 0) { d >>= 1; ++r; }
  // Deterministic Miller-Rabin bases for 64-bit integers.
  for (uint64_t a : {2ull, 3ull, 5ull, 7ull, 11ull, 13ull, 17ull, 19ull, 23ull, 29ull, 31ull, 37ull}) {
    uint64_t x = powmod_u64(a, d, n);
    if (x == 1 || x == n - 1) continue;
    bool composite = true;
    for (int i = 1; i < r; ++i) {
      x = mulmod_u64(x, x, n);
      if (x == n - 1) { composite = false; break; }
    }
    if (composite) return false;
  }
  return true;
}

inline uint64_t pollard_rho(uint64_t n) {
  if ((n & 1) == 0) return 2;
  uint64_t c = 1;
  for (;;) {
    uint64_t x = 2, y = 2, d = 1;
    while (d == 1) {
      x = mulmod_u64(x, x, n) + c;
      if (x >= n) x -= n;
      y = mulmod_u64(y, y, n) + c;
      if (y >= n) y -= n;
      y = mulmod_u64(y, y, n) + c;
      if (y >= n) y -= n;
      uint64_t diff = x > y ? x - y : y - x;
      d = std::gcd(diff == 0 ? n : diff, n);
    }
    if (d != n) return d;
    ++c;
  }
}

inline void distinct_prime_factors(uint64_t n, std::vector<uint64_t>& out) {
  if (n == 1) return;
  if (is_prime_u64(n)) {
    for (uint64_t p : out) {
      if (p == n) return;
    }
    out.push_back(n);
    return;
  }
  uint64_t d = pollard_rho(n);
  distinct_prime_factors(d, out);
  while (n % d == 0) n /= d;
  distinct_prime_factors(n, out);
}

// Carry-less multiply-reduce in GF(2)[x] modulo p, deg p = w <= 63.
// p is encoded with its x^w bit set; operands have degree < w.
inline uint64_t gf2_mulmod(uint64_t a, uint64_t b, uint64_t p, unsigned w) {
  uint64_t r = 0;
  while (b) {
    if (b & 1) r ^= a;
    b >>= 1;
    a <<= 1;
    if ((a >> w) & 1) a ^= p;
  }
  return r;
}

inline uint64_t gf2_powmod(uint64_t base, uint64_t exp, uint64_t p, unsigned w) {
  uint64_t r = 1;
  while (exp) {
    if (exp & 1) r = gf2_mulmod(r, base, p, w);
    base = gf2_mulmod(base, base, p, w);
    exp >>= 1;
  }
  return r;
}

}  // namespace detail

// True iff a purely linear spec describes a maximum-length LFSR. Checks that
// ord(x) mod the characteristic polynomial is exactly 2^w - 1: x^(2^w-1) = 1
// and x^((2^w-1)/q) != 1 for every prime q dividing 2^w - 1.
inline bool lfsr_spec_is_max_length(const FeedbackSpec& spec) {
  if (!spec.is_linear()) {
    throw std::invalid_argument("lfsr_spec_is_max_length: spec has a quadratic monomial");
  }
  if (spec.width > 63) {
    throw std::invalid_argument("lfsr_spec_is_max_length: width must be <= 63");
  }
  const unsigned w = spec.width;
  if (w == 1) return true;  // p(x) = x + 1, the one-stage toggle
  const uint64_t p = spec.linear_mask | (uint64_t{1} << w);
  const uint64_t order = max_period(w);
  if (detail::gf2_powmod(2, order, p, w) != 1) return false;  // 2 encodes x
  std::vector<uint64_t> primes;
  detail::distinct_prime_factors(order, primes);
  for (uint64_t q : primes) {
    if (detail::gf2_powmod(2, order / q, p, w) == 1) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// Randomized searches. Candidate i is derived from substream_seed(seed, i),
// so a search is reproducible and its result does not depend on batching.

struct SpecSearchResult {
  FeedbackSpec spec;
  uint64_t period = 0;
  uint64_t trials_used = 0;
};

struct CasrSearchResult {
  CasrRule rule;
  uint64_t period = 0;
  uint64_t trials_used = 0;
};

namespace detail {

inline std::vector<unsigned> sample_distinct_stages(Rng& rng, unsigned count, unsigned width) {
  std::vector<unsigned> picked;
  while (picked.size() < count) {
    unsigned t = 1 + static_cast<unsigned>(rng() % (width - 1));
    bool dup = false;
    for (unsigned u : picked) dup = dup || (u == t);
    if (!dup) picked.push_back(t);
  }
  return picked;
}

// A register of this feedback shape can only be maximum-length if the
// all-ones state is not a second fixed point, which pins the parity of the
// linear tap count: odd with a quadratic monomial present, even without.
inline FeedbackSpec sample_nlfsr_candidate(unsigned width, uint64_t seed, uint64_t idx) {
  Rng rng = make_rng(substream_seed(seed, idx));
  unsigned extra = 2 * static_cast<unsigned>(rng() % 3);        // 0, 2 or 4 extra linear taps
  std::vector<unsigned> taps = sample_distinct_stages(rng, extra + 2, width);
  unsigned qi = taps[extra], qj = taps[extra + 1];
  taps.resize(extra);
  taps.push_back(0);
  if (qi > qj) std::swap(qi, qj);
  return FeedbackSpec::make(width, std::move(taps), std::make_pair(qi, qj));
}

inline FeedbackSpec sample_lfsr_candidate(unsigned width, uint64_t seed, uint64_t idx) {
  Rng rng = make_rng(substream_seed(seed, idx));
  unsigned extra = 1 + 2 * static_cast<unsigned>(rng() % 3);    // 1, 3 or 5 extra linear taps
  if (extra > width - 1) extra = 1;
  std::vector<unsigned> taps = sample_distinct_stages(rng, extra, width);
  taps.push_back(0);
  return FeedbackSpec::make(width, std::move(taps), std::nullopt);
}

// Walks a batch of candidate registers in lockstep. Independent dependency
// chains keep the single-threaded walk throughput several times higher than
// one candidate at a time. Returns per-candidate orbit lengths of state 1.
template <unsigned kBatch>
inline void walk_batch(const std::array<FeedbackSpec, kBatch>& specs, unsigned width,
                       std::array<uint64_t, kBatch>& periods) {
  std::array<uint64_t, kBatch> s, lin, q1, q2;
  for (unsigned j = 0; j < kBatch; ++j) {
    s[j] = 1;
    lin[j] = specs[j].linear_mask;
    // Without a quadratic monomial, point both taps at bit 63, which is zero
    // for every walkable width, so the AND term vanishes.
    q1[j] = specs[j].quadratic_tap ? specs[j].quadratic_tap->first : 63;
    q2[j] = specs[j].quadratic_tap ? specs[j].quadratic_tap->second : 63;
    periods[j] = 0;
  }
  const unsigned top = width - 1;
  const uint64_t bound = max_period(width);
  unsigned remaining = kBatch;
  for (uint64_t iter = 1; iter <= bound && remaining > 0; ++iter) {
    for (unsigned j = 0; j < kBatch; ++j) {
      uint64_t v = s[j];
      uint64_t f = (static_cast<uint64_t>(std::popcount(v & lin[j])) ^
                    ((v >> q1[j]) & (v >> q2[j]))) & 1u;
      s[j] = (v >> 1) | (f << top);
    }
    for (unsigned j = 0; j < kBatch; ++j) {
      if (s[j] == 1 && periods[j] == 0) {
        periods[j] = iter;
        --remaining;
      }
    }
  }
}

template <typename SampleFn>
inline SpecSearchResult search_max_length(unsigned width, uint64_t max_trials, uint64_t seed,
                                          SampleFn sample, const char* what) {
  if (width < 3 || width > kMaxWalkWidth) {
    throw std::invalid_argument("find_max_length: width must be in [3, 29]");
  }
  constexpr unsigned kBatch = 8;
  const uint64_t target = max_period(width);
  for (uint64_t base = 0; base < max_trials; base += kBatch) {
    std::array<FeedbackSpec, kBatch> specs;
    unsigned live = static_cast<unsigned>(std::min<uint64_t>(kBatch, max_trials - base));
    for (unsigned j = 0; j < kBatch; ++j) {
      // Slots past max_trials repeat the last real candidate; never winners
      // unless the real one is, so determinism is unaffected.
      specs[j] = sample(width, seed, base + (j < live ? j : live - 1));
    }
    std::array<uint64_t, kBatch> periods;
    walk_batch<kBatch>(specs, width, periods);
    for (unsigned j = 0; j < live; ++j) {
      if (periods[j] == target) {
        return SpecSearchResult{specs[j], target, base + j + 1};
      }
    }
  }
  throw TrialsExhausted(std::string(what) + ": no maximum-length register found");
}

}  // namespace detail

// Randomized search for a maximum-length NLFSR of the supported feedback
// shape (x0, a few linear taps, one quadratic monomial). Every candidate is
// verified by the exhaustive orbit walk; same seed and trials, same result.
inline SpecSearchResult find_max_length_nlfsr(unsigned width, uint64_t max_trials, uint64_t seed) {
  return detail::search_max_length(
      width, max_trials, seed,
      [](unsigned w, uint64_t s, uint64_t i) { return detail::sample_nlfsr_candidate(w, s, i); },
      "find_max_length_nlfsr");
}

// Same search over purely linear specs. Widths beyond the walk cap use the
// algebraic primitivity test instead of the exhaustive walk.
inline SpecSearchResult find_max_length_lfsr(unsigned width, uint64_t max_trials, uint64_t seed) {
  if (width <= kMaxWalkWidth) {
    return detail::search_max_length(
        width, max_trials, seed,
        [](unsigned w, uint64_t s, uint64_t i) { return detail::sample_lfsr_candidate(w, s, i); },
        "find_max_length_lfsr");
  }
  if (width > 63) {
    throw std::invalid_argument("find_max_length_lfsr: width must be <= 63");
  }
  for (uint64_t i = 0; i < max_trials; ++i) {
    FeedbackSpec spec = detail::sample_lfsr_candidate(width, seed, i);
    if (lfsr_spec_is_max_length(spec)) {
      return SpecSearchResult{spec, max_period(width), i + 1};
    }
  }
  throw TrialsExhausted("find_max_length_lfsr: no primitive tap set found");
}

// Randomized search for a maximum-length rule-90/150 hybrid CASR.
inline CasrSearchResult find_max_length_casr(unsigned width, uint64_t max_trials, uint64_t seed) {
  if (width < 2 || width > kMaxWalkWidth) {
    throw std::invalid_argument("find_max_length_casr: width must be in [2, 29]");
  }
  const uint64_t target = max_period(width);
  for (uint64_t i = 0; i < max_trials; ++i) {
    Rng rng = make_rng(substream_seed(seed, i));
    std::vector<uint8_t> rules(width);
    for (auto& r : rules) r = random_bit(rng) ? 150 : 90;
    CasrRule rule = CasrRule::make(std::move(rules));
    if (verify_period(rule) == target) {
      return CasrSearchResult{rule, target, i + 1};
    }
  }
  throw TrialsExhausted("find_max_length_casr: no maximum-length rule vector found");
}

}  // namespace pufobf
