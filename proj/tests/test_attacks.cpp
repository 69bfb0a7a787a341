// Copyright pufobf contributors.
// Licensed under the Apache License, Version 2.0, see LICENSE for details.
// SPDX-License-Identifier: Apache-2.0
#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <set>
#include <vector>

#include "pufobf/avalanche.hpp"
#include "pufobf/cpa.hpp"
#include "pufobf/leakage.hpp"
#include "pufobf/ml_attack.hpp"
#include "pufobf/mlp.hpp"
#include "pufobf/protocol.hpp"

using namespace pufobf;

TEST_CASE("avalanche of the identity map is the identity matrix") {
  Rng rng = make_rng(0xaa1);
  auto identity = [](const BitState& key, const BitState& c) {
    (void)key;
    return c;
  };
  AvalancheReport rep = avalanche_test(identity, 12, 1000, {}, rng);
  REQUIRE(rep.width == 12);
  REQUIRE(rep.toggle_bits.size() == 12);
  for (unsigned i = 0; i < 12; ++i) {
    for (unsigned j = 0; j < 12; ++j) {
      CHECK(rep.at(i, j) == (i == j ? 1.0 : 0.0));
    }
  }
}

TEST_CASE("avalanche of a linear register is hard zero or one") {
  Rng rng = make_rng(0xaa2);
  FeedbackSpec lfsr = control_lfsr_spec();
  auto obf = [&](const BitState& key, const BitState& c) {
    uint64_t s = (key ^ c).bits();
    for (int i = 0; i < 112 + 56; ++i) s = detail::shift_step_raw(lfsr, s);
    return BitState(56, s);
  };
  AvalancheReport rep = avalanche_test(obf, 56, 1000, {0, 20, 41, 55}, rng);
  unsigned ones = 0;
  for (double v : rep.p) {
    bool hard = v == 0.0 || v == 1.0;
    CHECK(hard);
    ones += v == 1.0 ? 1u : 0u;
  }
  // A max-length register diffuses something: the rows are not all zero.
  CHECK(ones > 0);
}

TEST_CASE("avalanche of the keyed coupled-register pipeline sits near one half") {
  Rng rng = make_rng(0xaa3);
  Device d = default_device(KeyStore::plain_otp(BitState::zero(56)), Countermeasures{}, 1);
  auto obf = [&](const BitState& key, const BitState& c) {
    return obfuscate(d.spec_a, d.spec_b, d.coupling, key, c, 1)[0];
  };
  AvalancheReport rep = avalanche_test(obf, 56, 2000, {0, 13, 37, 55}, rng);
  // Loose band at this sample size; the acceptance harness runs the tight one.
  CHECK(rep.min_entry() > 0.44);
  CHECK(rep.max_entry() < 0.56);
}

TEST_CASE("avalanche input validation") {
  Rng rng = make_rng(1);
  auto identity = [](const BitState&, const BitState& c) { return c; };
  CHECK_THROWS_AS(avalanche_test(identity, 8, 999, {}, rng), std::invalid_argument);
  CHECK_THROWS_AS(avalanche_test(identity, 8, 1000, {8}, rng), std::invalid_argument);
  CHECK_THROWS_AS(avalanche_test(identity, 0, 1000, {}, rng), std::invalid_argument);
}

TEST_CASE("CPA recovers the key of an unprotected device from clean traces") {
  Rng rng = make_rng(0xc9a1);
  BitState key = random_state(56, rng);
  Device d = default_device(KeyStore::plain_otp(key), Countermeasures{}, 2);
  LeakageConfig cfg = LeakageConfig::make(LeakModel::HammingDistance, 0.0, 1,
                                          TraceAlign::ReferenceClock);
  TraceSet traces = collect_traces(d, 2000, cfg, rng);
  CpaResult res = cpa_attack(traces, 8, CpaTarget::LoadCycle, key);
  REQUIRE(res.true_ranks.size() == 7);
  for (unsigned r : res.true_ranks) CHECK(r == 1);
  CHECK(res.full_recovery(key));
  CHECK(res.mean_true_rank() == 1.0);
  for (double p : res.peaks) CHECK(p > 0.9);
}

TEST_CASE("CPA rejects a chunk size that does not divide the key") {
  Rng rng = make_rng(0xc9a2);
  Device d = default_device(KeyStore::plain_otp(random_state(56, rng)), Countermeasures{}, 3);
  LeakageConfig cfg = LeakageConfig::make(LeakModel::HammingDistance, 0.0, 1,
                                          TraceAlign::ReferenceClock);
  TraceSet traces = collect_traces(d, 100, cfg, rng);
  CHECK_THROWS_AS(cpa_attack(traces, 5, CpaTarget::LoadCycle), ChunkMismatch);
  CHECK_THROWS_AS(cpa_attack(traces, 9, CpaTarget::LoadCycle), ChunkMismatch);
}

TEST_CASE("CPA finds nothing in pure noise") {
  Rng rng = make_rng(0xc9a3);
  TraceSet set;
  set.config = LeakageConfig::make(LeakModel::HammingDistance, 1.0, 1,
                                   TraceAlign::ReferenceClock);
  const size_t n = 4000, n_samples = 28;
  BitState true_key = random_state(56, rng);
  for (size_t t = 0; t < n; ++t) {
    std::vector<float> row(n_samples);
    for (float& s : row) s = static_cast<float>(gaussian(rng));
    set.traces.push_back(std::move(row));
    set.challenges.push_back(random_state(56, rng));
    set.responses.push_back(0);
  }
  CpaResult res = cpa_attack(set, 8, CpaTarget::FullTrace, true_key);
  // Winning peaks stay at noise level: below ~4.5 sigma of the null, where
  // sigma = 1/sqrt(n) (the extra headroom covers the max over the scan).
  for (double p : res.peaks) CHECK(p < 4.5 / std::sqrt(static_cast<double>(n)));
  // True-chunk ranks scatter uniformly over 1..256 instead of clustering at 1.
  double mean_rank = res.mean_true_rank();
  CHECK(mean_rank > 32.0);
  CHECK(mean_rank < 224.0);
}

TEST_CASE("masking with clock randomization suppresses CPA at unit-test scale") {
  Rng rng = make_rng(0xc9a4);
  KeyStore ks = KeyStore::random_shared_otp(56, rng);
  Device d = default_device(ks, Countermeasures{true, true}, 4);
  Rng er = make_rng(5);
  d = enroll(d, 20000, 32, 1000, er);
  LeakageConfig cfg = LeakageConfig::make(LeakModel::HammingDistance, 0.5, 1,
                                          TraceAlign::ReferenceClock);
  TraceSet traces = collect_traces(d, 3000, cfg, rng);
  CpaResult res = cpa_attack(traces, 8, CpaTarget::FullTrace, ks.logical_key());
  double mean_rank = res.mean_true_rank();
  CHECK(mean_rank > 48.0);
  CHECK(mean_rank < 208.0);
  CHECK_FALSE(res.full_recovery(ks.logical_key()));
}

TEST_CASE("collect_crps returns unique challenges and is seed-reproducible") {
  Rng r1 = make_rng(0xc29);
  Device d = default_device(KeyStore::plain_otp(random_state(56, r1)), Countermeasures{}, 6);
  Rng a = make_rng(7), b = make_rng(7);
  CrpSet s1 = collect_crps(d, 500, CrpMode::Obfuscated, a);
  CrpSet s2 = collect_crps(d, 500, CrpMode::Obfuscated, b);
  REQUIRE(s1.size() == 500);
  std::set<uint64_t> uniq;
  for (const BitState& c : s1.challenges) uniq.insert(c.bits());
  CHECK(uniq.size() == 500);
  CHECK(s1.responses == s2.responses);
  for (size_t i = 0; i < s1.size(); ++i) {
    CHECK(s1.challenges[i].bits() == s2.challenges[i].bits());
  }
  // Asking for more unique challenges than half the space is refused rather
  // than looping forever.
  Device tiny = Device::make(KeyStore::plain_otp(BitState::zero(11)),
                             FeedbackSpec::make(5, {0, 2}, std::pair<unsigned, unsigned>{1, 3}),
                             FeedbackSpec::make(6, {0, 1, 4}, std::pair<unsigned, unsigned>{2, 5}),
                             Coupling::DroppedBit, default_prng_lfsr(), default_prng_casr(),
                             default_prng_taps(), 0, 10, 1.0, 0.05, 1, Countermeasures{});
  CHECK_THROWS_AS(collect_crps(tiny, 8000, CrpMode::Raw, a), std::invalid_argument);
}

TEST_CASE("raw and obfuscated responses disagree on about half the challenges") {
  Rng rng = make_rng(0xd1f);
  Device d = default_device(KeyStore::plain_otp(random_state(56, rng)), Countermeasures{}, 8);
  d.apuf.noise_sigma = 0.0;
  Rng a = make_rng(9), b = make_rng(9);
  CrpSet raw = collect_crps(d, 2000, CrpMode::Raw, a);
  CrpSet obf = collect_crps(d, 2000, CrpMode::Obfuscated, b);
  size_t differ = 0;
  for (size_t i = 0; i < raw.size(); ++i) {
    REQUIRE(raw.challenges[i].bits() == obf.challenges[i].bits());
    differ += raw.responses[i] != obf.responses[i];
  }
  double frac = static_cast<double>(differ) / raw.size();
  CHECK(frac > 0.4);
  CHECK(frac < 0.6);
}

TEST_CASE("the classifier learns a raw arbiter instance") {
  Rng rng = make_rng(0x317a);
  Device d = Device::make(KeyStore::plain_otp(BitState::zero(20)),
                          FeedbackSpec::make(10, {0, 2, 5}, std::pair<unsigned, unsigned>{1, 6}),
                          FeedbackSpec::make(10, {0, 1, 4}, std::pair<unsigned, unsigned>{2, 8}),
                          Coupling::DroppedBit, default_prng_lfsr(), default_prng_casr(),
                          default_prng_taps(), 0, 10, 1.0, 0.0, 1, Countermeasures{});
  CrpSet crps = collect_crps(d, 8000, CrpMode::Raw, rng);
  MlpConfig cfg = MlpConfig::make({32, 32}, 20, 0.05, 0.9, 64);
  MlAttackResult res = train_ml_attack(crps, cfg, 1234);
  CHECK(res.train_n + res.test_n == crps.size());
  CHECK(res.test_accuracy >= 0.95);
}

TEST_CASE("coin-flip labels are unlearnable") {
  Rng rng = make_rng(0xf1b);
  CrpSet crps;
  crps.width = 16;
  for (unsigned i = 0; i < 5000; ++i) {
    crps.challenges.push_back(random_state(16, rng));
    crps.responses.push_back(random_bit(rng));
  }
  MlpConfig cfg = MlpConfig::make({32, 32}, 10, 0.05, 0.9, 64);
  MlAttackResult res = train_ml_attack(crps, cfg, 99);
  double sigma = std::sqrt(0.25 / static_cast<double>(res.test_n));
  CHECK(res.test_accuracy <= 0.5 + 3.0 * sigma);
}

TEST_CASE("non-finite loss raises DivergedTraining") {
  MlpModel m = mlp_init(3, {4}, 7);
  std::vector<float> x = {1.0f, std::numeric_limits<float>::quiet_NaN(), 0.5f};
  std::vector<uint8_t> y = {1};
  std::vector<uint32_t> order = {0};
  MlpConfig cfg = MlpConfig::make({4}, 1, 0.01, 0.9, 1);
  std::vector<std::vector<float>> vw, vb;
  CHECK_THROWS_AS(mlp_train_epoch(m, x, y, order, cfg, vw, vb), DivergedTraining);
}

TEST_CASE("mlp configuration validation") {
  CHECK_THROWS_AS(MlpConfig::make({16}, 0, 0.05, 0.9, 64), std::invalid_argument);
  CHECK_THROWS_AS(MlpConfig::make({16}, 1, 0.0, 0.9, 64), std::invalid_argument);
  CHECK_THROWS_AS(MlpConfig::make({16}, 1, 0.05, 1.0, 64), std::invalid_argument);
  CHECK_THROWS_AS(MlpConfig::make({16}, 1, 0.05, 0.9, 0), std::invalid_argument);
  CHECK_THROWS_AS(MlpConfig::make({0}, 1, 0.05, 0.9, 64), std::invalid_argument);
}
