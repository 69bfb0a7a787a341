// Copyright pufobf contributors.
// Licensed under the Apache License, Version 2.0, see LICENSE for details.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <bit>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <vector>

#include "pufobf/bitstate.hpp"
#include "pufobf/device.hpp"
#include "pufobf/protocol.hpp"
#include "pufobf/rng.hpp"
#include "pufobf/transcript.hpp"

namespace pufobf {

// What a trace sample measures: switching activity (Hamming distance between
// the old and new register values) or drive strength (Hamming weight of the
// new value), summed over every register bank written that cycle.
enum class LeakModel : uint8_t { HammingDistance, HammingWeight };

// ReferenceClock lays samples out on the reference-clock timeline, so gated
// (skipped) cycles hold noise only and clock randomization shows up as trace
// misalignment. EnabledCyclesOnly indexes by consumer-clock cycle instead,
// which re-aligns runs and isolates masking's contribution.
enum class TraceAlign : uint8_t { ReferenceClock, EnabledCyclesOnly };

struct LeakageConfig {
  LeakModel model = LeakModel::HammingDistance;
  double noise_sigma = 0.0;
  unsigned samples_per_cycle = 1;
  TraceAlign align = TraceAlign::ReferenceClock;

  static LeakageConfig make(LeakModel model, double noise_sigma, unsigned samples_per_cycle,
                            TraceAlign align) {
    if (samples_per_cycle < 1) {
      throw std::invalid_argument("LeakageConfig: samples_per_cycle must be >= 1");
    }
    if (noise_sigma < 0) {
      throw std::invalid_argument("LeakageConfig: noise_sigma must be >= 0");
    }
    return LeakageConfig{model, noise_sigma, samples_per_cycle, align};
  }
};

enum class ChallengeSource : uint8_t { Random, FixedList };

struct TraceSet {
  std::vector<std::vector<float>> traces;  // all rows equal length, zero-padded
  std::vector<BitState> challenges;
  LeakageConfig config;
  Countermeasures countermeasures;
  std::vector<uint8_t> responses;  // first response bit of each run

  size_t n_traces() const { return traces.size(); }
  size_t n_samples() const { return traces.empty() ? 0 : traces.front().size(); }
};

// One simulated power trace from a finished evaluation. Every cycle gets
// samples_per_cycle samples of N(0, noise_sigma); cycles that wrote a
// register add that cycle's summed leakage value on top.
inline std::vector<float> simulate_trace(const EvalTranscript& t, const LeakageConfig& cfg,
                                         Rng& rng) {
  // Ordered leakage totals per contributing cycle. EnabledCyclesOnly drops
  // the randomizer bank: its timeline is indexed by consumer activity alone.
  std::map<uint32_t, double> value;
  for (const WriteRec& w : t.writes) {
    if (cfg.align == TraceAlign::EnabledCyclesOnly && w.bank == Bank::ClockLfsr) continue;
    double v = cfg.model == LeakModel::HammingDistance
                   ? static_cast<double>(std::popcount(w.before ^ w.after))
                   : static_cast<double>(std::popcount(w.after));
    value[w.ref_cycle] += v;
  }
  std::vector<float> row;
  if (cfg.align == TraceAlign::ReferenceClock) {
    row.assign(static_cast<size_t>(t.ref_cycles) * cfg.samples_per_cycle, 0.0f);
    for (const auto& [cyc, v] : value) {
      for (unsigned k = 0; k < cfg.samples_per_cycle; ++k) {
        row[static_cast<size_t>(cyc) * cfg.samples_per_cycle + k] = static_cast<float>(v);
      }
    }
  } else {
    // Power-up loads and enabled cycles collapse onto a gate-free timeline.
    row.reserve(value.size() * cfg.samples_per_cycle);
    for (const auto& [cyc, v] : value) {
      for (unsigned k = 0; k < cfg.samples_per_cycle; ++k) row.push_back(static_cast<float>(v));
    }
  }
  if (cfg.noise_sigma > 0) {
    for (float& s : row) s += static_cast<float>(gaussian(rng) * cfg.noise_sigma);
  }
  return row;
}

// Acquisition campaign: one evaluation (a single response bit) per challenge,
// one trace per evaluation. Rows are padded with zeros to the longest run so
// the set forms a rectangular matrix.
inline TraceSet collect_traces(const Device& d, unsigned n, ChallengeSource source,
                               const std::vector<BitState>& fixed, const LeakageConfig& cfg,
                               Rng& rng, const Schedule& sched = {}) {
  if (n < 1) throw std::invalid_argument("collect_traces: need n >= 1");
  if (source == ChallengeSource::FixedList && fixed.size() != n) {
    throw std::invalid_argument("collect_traces: fixed list must hold exactly n challenges");
  }
  TraceSet set;
  set.config = cfg;
  set.countermeasures = d.cm;
  set.traces.reserve(n);
  set.challenges.reserve(n);
  set.responses.reserve(n);
  const unsigned w = d.challenge_width();
  for (unsigned i = 0; i < n; ++i) {
    BitState ch = source == ChallengeSource::Random ? random_state(w, rng) : fixed[i];
    EvalResult r = d.cm.masking ? evaluate_masked(d, ch, 1, rng, sched)
                                : evaluate_plain(d, ch, 1, rng, sched);
    set.traces.push_back(simulate_trace(r.transcript, cfg, rng));
    set.challenges.push_back(ch);
    set.responses.push_back(r.responses.front());
  }
  size_t n_samples = 0;
  for (const auto& row : set.traces) n_samples = std::max(n_samples, row.size());
  for (auto& row : set.traces) row.resize(n_samples, 0.0f);
  return set;
}

inline TraceSet collect_traces(const Device& d, unsigned n, const LeakageConfig& cfg, Rng& rng,
                               const Schedule& sched = {}) {
  return collect_traces(d, n, ChallengeSource::Random, {}, cfg, rng, sched);
}

}  // namespace pufobf
