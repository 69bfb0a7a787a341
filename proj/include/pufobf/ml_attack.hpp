// Copyright pufobf contributors.
// Licensed under the Apache License, Version 2.0, see LICENSE for details.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <random>
#include <stdexcept>
#include <unordered_set>
#include <vector>

#include "pufobf/apuf.hpp"
#include "pufobf/bitstate.hpp"
#include "pufobf/device.hpp"
#include "pufobf/mlp.hpp"
#include "pufobf/protocol.hpp"
#include "pufobf/rng.hpp"

namespace pufobf {

enum class CrpMode : uint8_t { Raw, Obfuscated };

// Challenge-response dataset as the modeling adversary sees it: external
// challenges and voted response bits.
struct CrpSet {
  unsigned width = 0;
  CrpMode mode = CrpMode::Raw;
  std::vector<BitState> challenges;
  std::vector<uint8_t> responses;

  size_t size() const { return challenges.size(); }
};

// Harvests n unique uniformly random external challenges with their voted
// responses. Raw mode feeds the challenge straight to the arbiter chain,
// bypassing the obfuscation stage; Obfuscated mode routes it through the
// keyed register pipeline first. Countermeasures never change the logical
// challenge-to-response map, so the pipeline's deterministic form is used.
inline CrpSet collect_crps(const Device& d, unsigned n, CrpMode mode, Rng& rng,
                           const Schedule& sched = {}) {
  if (n < 1) throw std::invalid_argument("collect_crps: need n >= 1");
  const unsigned w = d.challenge_width();
  if (w < 63 && n > (uint64_t{1} << (w - 1))) {
    throw std::invalid_argument(
        "collect_crps: unique-challenge count exceeds half the challenge space");
  }
  CrpSet set;
  set.width = w;
  set.mode = mode;
  set.challenges.reserve(n);
  set.responses.reserve(n);
  std::unordered_set<uint64_t> seen;
  seen.reserve(static_cast<size_t>(n) * 2);
  const BitState key = d.keystore.logical_key();
  for (unsigned i = 0; i < n; ++i) {
    BitState c = random_state(w, rng);
    while (!seen.insert(c.bits()).second) c = random_state(w, rng);
    BitState puf_input =
        mode == CrpMode::Raw ? c : obfuscate(d.spec_a, d.spec_b, d.coupling, key, c, 1, sched)[0];
    set.challenges.push_back(c);
    set.responses.push_back(apuf_eval_voted(d.apuf, puf_input, d.votes, rng) ? 1u : 0u);
  }
  return set;
}

struct MlAttackResult {
  std::vector<unsigned> hidden;
  unsigned epochs = 0;
  double learning_rate = 0.0;
  size_t train_n = 0;
  size_t test_n = 0;
  double test_accuracy = 0.0;
  double train_accuracy = 0.0;
  double final_loss = 0.0;
  MlpModel model;
};

namespace detail {

// Parity-transformed feature matrix, n x (width + 1), float32 row-major.
inline std::vector<float> crp_features(const CrpSet& crps) {
  const size_t dim = crps.width + 1;
  std::vector<float> x(crps.size() * dim);
  for (size_t i = 0; i < crps.size(); ++i) {
    auto phi = parity_features(crps.challenges[i]);
    for (size_t j = 0; j < dim; ++j) x[i * dim + j] = static_cast<float>(phi[j]);
  }
  return x;
}

}  // namespace detail

// Trains the classifier on a train/test split of the dataset (disjoint by
// construction: a shuffled partition of unique challenges) and reports the
// held-out accuracy. test_fraction of the data is reserved for testing.
inline MlAttackResult train_ml_attack(const CrpSet& crps, const MlpConfig& cfg, uint64_t seed,
                                      double test_fraction = 0.2) {
  if (crps.size() < 10) throw std::invalid_argument("train_ml_attack: dataset too small");
  if (test_fraction <= 0 || test_fraction >= 1) {
    throw std::invalid_argument("train_ml_attack: test fraction must be in (0, 1)");
  }
  const size_t n = crps.size();
  const size_t n_test = std::max<size_t>(1, static_cast<size_t>(n * test_fraction));
  const size_t n_train = n - n_test;
  const unsigned dim = crps.width + 1;

  std::vector<uint32_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0u);
  std::mt19937_64 gen(seed);
  std::shuffle(perm.begin(), perm.end(), gen);

  std::vector<float> all = detail::crp_features(crps);
  std::vector<float> train_x(n_train * dim), test_x(n_test * dim);
  std::vector<uint8_t> train_y(n_train), test_y(n_test);
  for (size_t i = 0; i < n_train; ++i) {
    std::copy_n(all.data() + static_cast<size_t>(perm[i]) * dim, dim, train_x.data() + i * dim);
    train_y[i] = crps.responses[perm[i]];
  }
  for (size_t i = 0; i < n_test; ++i) {
    std::copy_n(all.data() + static_cast<size_t>(perm[n_train + i]) * dim, dim,
                test_x.data() + i * dim);
    test_y[i] = crps.responses[perm[n_train + i]];
  }
  all.clear();
  all.shrink_to_fit();

  MlpModel model = mlp_init(dim, cfg.hidden, gen());
  std::vector<std::vector<float>> vel_w, vel_b;
  std::vector<uint32_t> order(n_train);
  std::iota(order.begin(), order.end(), 0u);
  double loss = 0.0;
  for (unsigned e = 0; e < cfg.epochs; ++e) {
    std::shuffle(order.begin(), order.end(), gen);
    loss = mlp_train_epoch(model, train_x, train_y, order, cfg, vel_w, vel_b);
  }

  MlAttackResult res;
  res.hidden = cfg.hidden;
  res.epochs = cfg.epochs;
  res.learning_rate = cfg.learning_rate;
  res.train_n = n_train;
  res.test_n = n_test;
  res.final_loss = loss;
  res.train_accuracy = mlp_accuracy(model, train_x, train_y);
  res.test_accuracy = mlp_accuracy(model, test_x, test_y);
  res.model = std::move(model);
  return res;
}

}  // namespace pufobf
