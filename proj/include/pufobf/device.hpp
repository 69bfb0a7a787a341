// Copyright pufobf contributors.
// Licensed under the Apache License, Version 2.0, see LICENSE for details.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "pufobf/apuf.hpp"
#include "pufobf/bitstate.hpp"
#include "pufobf/casr.hpp"
#include "pufobf/clockrand.hpp"
#include "pufobf/errors.hpp"
#include "pufobf/feedback.hpp"
#include "pufobf/nlfsr.hpp"
#include "pufobf/prng.hpp"
#include "pufobf/rng.hpp"

namespace pufobf {

enum class KeyMode : uint8_t { PlainOtp, SharedOtp };

// Key storage. SharedOtp holds the key as two XOR shares and the logical
// value is never recombined by any evaluation path; logical_key() exists for
// enrollment bookkeeping and attack ground truth only.
struct KeyStore {
  KeyMode mode = KeyMode::PlainOtp;
  BitState s1;
  BitState s2;

  static KeyStore plain_otp(const BitState& key) {
    return KeyStore{KeyMode::PlainOtp, key, BitState::zero(key.width())};
  }

  static KeyStore shared_otp(const BitState& share1, const BitState& share2) {
    if (share1.width() != share2.width()) {
      throw std::invalid_argument("KeyStore: share widths must match");
    }
    return KeyStore{KeyMode::SharedOtp, share1, share2};
  }

  // Fresh random key of the given width, pre-split into two shares.
  static KeyStore random_shared_otp(unsigned width, Rng& rng) {
    BitState key = random_state(width, rng);
    BitState r = random_state(width, rng);
    return shared_otp(key ^ r, r);
  }

  unsigned width() const { return s1.width(); }

  const BitState& plain() const {
    if (mode != KeyMode::PlainOtp) throw ConfigMismatch("KeyStore: not in plain mode");
    return s1;
  }

  BitState logical_key() const { return mode == KeyMode::PlainOtp ? s1 : s1 ^ s2; }
};

struct Countermeasures {
  bool clock_randomization = false;
  bool masking = false;
};

// Persisted outcome of enrollment: the near-threshold challenge that seeds
// the PRNG, plus the instance bias consumed by attack acceptance bounds.
struct Enrollment {
  BitState unstable_challenge;
  double measured_uniformity = 0.0;
};

// Complete simulated device. Immutable after construction; evaluation flows
// take a const Device and an RNG stream, so identical configuration plus
// identical streams replay identical outputs.
struct Device {
  KeyStore keystore;
  FeedbackSpec spec_a;
  FeedbackSpec spec_b;
  Coupling coupling = Coupling::DroppedBit;
  FeedbackSpec prng_lfsr;
  CasrRule prng_casr;
  PrngTaps prng_taps;
  unsigned clk_skip_stage = 0;
  ApufModel apuf;
  unsigned votes = 7;
  Countermeasures cm;
  std::optional<Enrollment> enrollment;
  // APUF derivation parameters, kept so a device file round-trips.
  uint64_t apuf_seed = 0;
  double sigma_w = 1.0;
  double noise_scale = 0.05;

  static Device make(KeyStore keystore, const FeedbackSpec& spec_a, const FeedbackSpec& spec_b,
                     Coupling coupling, const FeedbackSpec& prng_lfsr, const CasrRule& prng_casr,
                     const PrngTaps& prng_taps, unsigned clk_skip_stage, uint64_t apuf_seed,
                     double sigma_w, double noise_scale, unsigned votes, Countermeasures cm) {
    if (cm.masking && keystore.mode != KeyMode::SharedOtp) {
      throw ConfigMismatch("Device: masking requires a two-share key store");
    }
    // Surface pair/PRNG configuration errors at construction, not first use.
    NlfsrPair::make(spec_a, spec_b, coupling, BitState::zero(spec_a.width),
                    BitState::zero(spec_b.width));
    Prng::make(prng_lfsr, prng_casr, prng_taps, BitState(prng_lfsr.width, 1),
               BitState(prng_casr.width, 1));
    if (clk_skip_stage >= prng_lfsr.width) {
      throw std::invalid_argument("Device: clock skip stage out of range");
    }
    unsigned w = spec_a.width + spec_b.width;
    if (keystore.width() != w) {
      throw std::invalid_argument("Device: key width must equal combined register width");
    }
    if (votes == 0 || votes % 2 == 0) {
      throw std::invalid_argument("Device: vote count must be odd");
    }
    Rng rng = make_rng(apuf_seed);
    ApufModel apuf = ApufModel::random(w, sigma_w, noise_scale, rng);
    return Device{std::move(keystore), spec_a,  spec_b,      coupling,    prng_lfsr,
                  prng_casr,           prng_taps, clk_skip_stage, std::move(apuf), votes,
                  cm,                  std::nullopt, apuf_seed, sigma_w,  noise_scale};
  }

  unsigned challenge_width() const { return spec_a.width + spec_b.width; }
};

// ---- Shipped default configuration ----------------------------------------
//
// The 27/29-bit feedback expressions come from a randomized maximum-length
// search (the same family find_max_length_nlfsr draws from); the 8-bit LFSR,
// the 11-bit rule-90/150 CASR vector and the 56-bit linear control spec are
// search results verified by exhaustive walk or algebraic order check.

inline FeedbackSpec default_spec_a() {
  return FeedbackSpec::make(27, {0, 2, 7, 11, 16}, std::pair<unsigned, unsigned>{5, 17});
}

inline FeedbackSpec default_spec_b() {
  return FeedbackSpec::make(29, {0, 3, 8, 14, 21}, std::pair<unsigned, unsigned>{6, 19});
}

inline FeedbackSpec default_prng_lfsr() {
  return FeedbackSpec::make(8, {0, 4, 5, 6}, std::nullopt);
}

inline CasrRule default_prng_casr() {
  return CasrRule::make({90, 90, 90, 90, 150, 90, 90, 90, 150, 90, 150});
}

inline PrngTaps default_prng_taps() {
  return PrngTaps{{{{1u, 2u}, {4u, 6u}, {6u, 9u}}}};
}

// Maximum-length 56-bit linear spec for the avalanche control experiment.
inline FeedbackSpec control_lfsr_spec() {
  return FeedbackSpec::make(56, {0, 2, 17, 36, 41, 44}, std::nullopt);
}

inline Device default_device(KeyStore keystore, Countermeasures cm, uint64_t apuf_seed) {
  return Device::make(std::move(keystore), default_spec_a(), default_spec_b(),
                      Coupling::DroppedBit, default_prng_lfsr(), default_prng_casr(),
                      default_prng_taps(), 0, apuf_seed, 1.0, 0.05, 7, cm);
}

}  // namespace pufobf
