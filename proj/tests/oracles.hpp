// Copyright pufobf contributors.
// Licensed under the Apache License, Version 2.0, see LICENSE for details.
// SPDX-License-Identifier: Apache-2.0
//
// Naive reference implementations used only by tests. Everything here works
// bit by bit on plain vectors, with no shared code or word-level tricks from
// the library, so the two routes can disagree when either is wrong.
#pragma once

#include <cstdint>
#include <utility>
#include <vector>

namespace oracle {

using Bits = std::vector<int>;

inline Bits to_bits(uint64_t v, unsigned width) {
  Bits b(width);
  for (unsigned i = 0; i < width; ++i) b[i] = static_cast<int>((v >> i) & 1u);
  return b;
}

inline uint64_t from_bits(const Bits& b) {
  uint64_t v = 0;
  for (size_t i = 0; i < b.size(); ++i) {
    if (b[i]) v |= uint64_t{1} << i;
  }
  return v;
}

// Feedback of the registers under test: stage 0, XOR of listed linear taps,
// plus an optional single AND monomial.
inline int feedback(const Bits& s, const std::vector<unsigned>& linear_taps,
                    const std::vector<std::pair<unsigned, unsigned>>& quad_taps) {
  int f = 0;
  for (unsigned t : linear_taps) f ^= s[t];
  for (auto [i, j] : quad_taps) f ^= s[i] & s[j];
  return f & 1;
}

inline Bits shift_down(const Bits& s, int new_top) {
  Bits n(s.size());
  for (size_t i = 0; i + 1 < s.size(); ++i) n[i] = s[i + 1];
  n[s.size() - 1] = new_top & 1;
  return n;
}

inline Bits lfsr_step(const Bits& s, const std::vector<unsigned>& linear_taps) {
  return shift_down(s, feedback(s, linear_taps, {}));
}

// coupling_stage: which stage of the opposite register is XORed in.
inline std::pair<Bits, Bits> nlfsr_pair_step(
    const Bits& a, const Bits& b,
    const std::vector<unsigned>& lin_a, std::pair<unsigned, unsigned> quad_a,
    const std::vector<unsigned>& lin_b, std::pair<unsigned, unsigned> quad_b,
    unsigned coupling_stage) {
  int fa = feedback(a, lin_a, {quad_a}) ^ b[coupling_stage];
  int fb = feedback(b, lin_b, {quad_b}) ^ a[coupling_stage];
  return {shift_down(a, fa), shift_down(b, fb)};
}

inline Bits casr_step(const Bits& s, const std::vector<uint8_t>& rules) {
  Bits n(s.size());
  for (size_t i = 0; i < s.size(); ++i) {
    int left = i > 0 ? s[i - 1] : 0;
    int right = i + 1 < s.size() ? s[i + 1] : 0;
    n[i] = left ^ right ^ (rules[i] == 150 ? s[i] : 0);
  }
  return n;
}

// Literal two-path race: each stage has four path delays, a straight and a
// crossed one per rail; the challenge bit picks the configuration and an
// arbiter with offset theta compares arrival times. Shares nothing with the
// weight-vector model in the library.
struct RaceStage {
  double t0, b0;  // straight: top->top, bottom->bottom
  double t1, b1;  // crossed: bottom->top, top->bottom
};

inline bool race_response(const std::vector<RaceStage>& stages, const Bits& c, double theta) {
  double top = 0.0, bottom = 0.0;
  for (size_t i = 0; i < stages.size(); ++i) {
    if (c[i] == 0) {
      top += stages[i].t0;
      bottom += stages[i].b0;
    } else {
      double new_top = bottom + stages[i].t1;
      double new_bottom = top + stages[i].b1;
      top = new_top;
      bottom = new_bottom;
    }
  }
  return top - bottom + theta > 0;
}

// Collapses the four delays per stage into the weight vector the model uses.
inline std::vector<double> race_weights(const std::vector<RaceStage>& stages, double theta) {
  size_t n = stages.size();
  std::vector<double> alpha(n), beta(n);
  for (size_t i = 0; i < n; ++i) {
    double d0 = stages[i].t0 - stages[i].b0;
    double d1 = stages[i].t1 - stages[i].b1;
    alpha[i] = 0.5 * (d0 + d1);
    beta[i] = 0.5 * (d0 - d1);
  }
  std::vector<double> w(n + 1);
  w[0] = beta[0];
  for (size_t k = 1; k < n; ++k) w[k] = alpha[k - 1] + beta[k];
  w[n] = alpha[n - 1] + theta;
  return w;
}

}  // namespace oracle
