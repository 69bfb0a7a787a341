// Copyright pufobf contributors.
// Licensed under the Apache License, Version 2.0, see LICENSE for details.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "pufobf/bitstate.hpp"
#include "pufobf/errors.hpp"
#include "pufobf/rng.hpp"

namespace pufobf {

// Additive-delay arbiter model. A challenge of n bits maps to n+1 parity
// features
//
//   phi_i = prod_{j >= i} (1 - 2 c_j)  for i < n,   phi_n = 1
//
// and the response is the sign of w . phi plus per-evaluation Gaussian noise.
// The weight vector collapses the four per-stage path delays of the physical
// race; the last entry is the arbiter bias.
struct ApufModel {
  unsigned n_stages = 0;
  std::vector<double> w;  // n_stages + 1 entries
  double noise_sigma = 0.0;

  static ApufModel make(unsigned n_stages, std::vector<double> w, double noise_sigma) {
    if (n_stages == 0) throw std::invalid_argument("ApufModel: n_stages must be positive");
    if (w.size() != n_stages + 1) {
      throw std::invalid_argument("ApufModel: weight count must be n_stages + 1");
    }
    if (noise_sigma < 0) throw std::invalid_argument("ApufModel: noise_sigma must be >= 0");
    return ApufModel{n_stages, std::move(w), noise_sigma};
  }

  // Weights iid N(0, sigma_w^2). noise_scale sets the per-evaluation noise to
  // noise_scale * sigma_w * sqrt(n_stages + 1), i.e. relative to the typical
  // margin magnitude; at the default 0.05 a single evaluation disagrees with
  // the noiseless response on about arctan(0.05)/pi ~ 1.6% of challenges and
  // two repeated evaluations disagree on about twice that.
  static ApufModel random(unsigned n_stages, double sigma_w, double noise_scale, Rng& rng) {
    if (sigma_w <= 0 || noise_scale < 0) {
      throw std::invalid_argument("ApufModel: sigma_w must be > 0 and noise_scale >= 0");
    }
    std::vector<double> w(n_stages + 1);
    for (auto& v : w) v = sigma_w * gaussian(rng);
    double ns = noise_scale * sigma_w * std::sqrt(static_cast<double>(n_stages + 1));
    return make(n_stages, std::move(w), ns);
  }
};

inline std::vector<double> parity_features(const BitState& challenge) {
  unsigned n = challenge.width();
  std::vector<double> phi(n + 1);
  phi[n] = 1.0;
  for (unsigned i = n; i-- > 0;) {
    phi[i] = phi[i + 1] * (challenge.bit(i) ? -1.0 : 1.0);
  }
  return phi;
}

inline double apuf_margin(const ApufModel& m, const BitState& challenge) {
  if (challenge.width() != m.n_stages) {
    throw std::invalid_argument("apuf_margin: challenge width does not match model");
  }
  // phi is a suffix product; accumulate in one pass without materializing it.
  double acc = m.w[m.n_stages];
  double suffix = 1.0;
  for (unsigned i = m.n_stages; i-- > 0;) {
    suffix *= challenge.bit(i) ? -1.0 : 1.0;
    acc += m.w[i] * suffix;
  }
  return acc;
}

inline bool apuf_eval_noiseless(const ApufModel& m, const BitState& challenge) {
  return apuf_margin(m, challenge) > 0;
}

inline bool apuf_eval(const ApufModel& m, const BitState& challenge, Rng& noise) {
  return apuf_margin(m, challenge) + m.noise_sigma * gaussian(noise) > 0;
}

// Majority of an odd number of independent noisy evaluations.
inline bool apuf_eval_voted(const ApufModel& m, const BitState& challenge, unsigned votes,
                            Rng& noise) {
  if (votes == 0 || votes % 2 == 0) {
    throw std::invalid_argument("apuf_eval_voted: vote count must be odd");
  }
  double margin = apuf_margin(m, challenge);
  unsigned ones = 0;
  for (unsigned v = 0; v < votes; ++v) {
    ones += (margin + m.noise_sigma * gaussian(noise) > 0) ? 1u : 0u;
  }
  return 2 * ones > votes;
}

// Fraction of 1-responses over n uniformly random challenges, voted
// evaluation. A large sample is required so downstream consumers can treat
// the result as the instance's bias rather than sampling noise.
inline double uniformity(const ApufModel& m, unsigned n, unsigned votes, Rng& rng) {
  if (n < 1000) throw std::invalid_argument("uniformity: need n >= 1000");
  unsigned ones = 0;
  for (unsigned i = 0; i < n; ++i) {
    BitState c = random_state(m.n_stages, rng);
    ones += apuf_eval_voted(m, c, votes, rng) ? 1u : 0u;
  }
  return static_cast<double>(ones) / n;
}

// Scans random challenges for one whose single-evaluation 1-rate over
// evals_per_trial draws lies in [0.4, 0.6], i.e. a challenge sitting close
// enough to the arbiter threshold to behave as an entropy source. With
// noise_sigma = 0 every challenge is perfectly stable and the scan fails.
inline BitState find_unstable_challenge(const ApufModel& m, unsigned trials,
                                        unsigned evals_per_trial, Rng& rng) {
  if (evals_per_trial == 0) {
    throw std::invalid_argument("find_unstable_challenge: evals_per_trial must be positive");
  }
  for (unsigned t = 0; t < trials; ++t) {
    BitState c = random_state(m.n_stages, rng);
    double margin = apuf_margin(m, c);
    unsigned ones = 0;
    for (unsigned e = 0; e < evals_per_trial; ++e) {
      ones += (margin + m.noise_sigma * gaussian(rng) > 0) ? 1u : 0u;
    }
    double rate = static_cast<double>(ones) / evals_per_trial;
    if (rate >= 0.4 && rate <= 0.6) return c;
  }
  throw NotFound("find_unstable_challenge: no unstable challenge found; noise model too weak");
}

// n single (non-voted) evaluations of one challenge. Fed an unstable
// challenge this is the device's TRNG; fed a stable one it returns a
// constant stream, which callers must treat as a degenerate seed source.
inline std::vector<uint8_t> trng_bits(const ApufModel& m, const BitState& challenge, unsigned n,
                                      Rng& noise) {
  std::vector<uint8_t> out(n);
  double margin = apuf_margin(m, challenge);
  for (unsigned i = 0; i < n; ++i) {
    out[i] = (margin + m.noise_sigma * gaussian(noise) > 0) ? 1u : 0u;
  }
  return out;
}

}  // namespace pufobf
