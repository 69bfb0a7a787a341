// Copyright pufobf contributors.
// Licensed under the Apache License, Version 2.0, see LICENSE for details.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

#include "pufobf/bitstate.hpp"
#include "pufobf/errors.hpp"
#include "pufobf/leakage.hpp"

namespace pufobf {

// Where the attack looks: LoadCycle restricts the correlation scan to the
// window where the byte-serial key load can land (generous enough to cover
// clock-randomized placements); FullTrace scans every sample.
enum class CpaTarget : uint8_t { LoadCycle, FullTrace };

struct CpaResult {
  BitState recovered_key;
  std::vector<double> peaks;         // winning hypothesis's peak correlation, per chunk
  std::vector<unsigned> true_ranks;  // 1-based rank of the true chunk, if a true key was given
  unsigned chunk_bits = 0;

  double mean_true_rank() const {
    double s = 0.0;
    for (unsigned r : true_ranks) s += r;
    return true_ranks.empty() ? 0.0 : s / true_ranks.size();
  }

  bool full_recovery(const BitState& true_key) const {
    return recovered_key.bits() == true_key.bits();
  }
};

// First-order correlation power analysis against the key-xor-challenge load.
// For every contiguous chunk of key bits, enumerates all 2^chunk_bits
// hypotheses, predicts per-trace leakage HW(challenge_chunk xor hypothesis),
// and scores each hypothesis by its maximum sample-wise Pearson correlation.
// The score is signed: switching activity grows with the predicted weight,
// so the right hypothesis correlates positively, while an absolute-value
// score would tie every chunk with its bitwise complement (the complement's
// prediction is 8 minus the true one at every sample). The per-chunk winner
// is taken; ranks of the true chunks are reported when the true key is
// supplied.
//
// The challenge-value bucketing keeps this cheap: predictions depend on the
// challenge chunk only, so per-sample sums conditioned on the chunk value
// are sufficient statistics for every hypothesis at once.
inline CpaResult cpa_attack(const TraceSet& traces, unsigned chunk_bits, CpaTarget target,
                            const std::optional<BitState>& true_key = std::nullopt) {
  if (traces.n_traces() == 0) throw std::invalid_argument("cpa_attack: empty trace set");
  const unsigned width = traces.challenges.front().width();
  if (chunk_bits == 0 || chunk_bits > 16) {
    throw std::invalid_argument("cpa_attack: chunk_bits must be in 1..16");
  }
  if (width % chunk_bits != 0) {
    throw ChunkMismatch("cpa_attack: " + std::to_string(width) +
                        " key bits are not divisible into " + std::to_string(chunk_bits) +
                        "-bit chunks");
  }
  if (true_key && true_key->width() != width) {
    throw std::invalid_argument("cpa_attack: true key width mismatch");
  }

  const size_t n = traces.n_traces();
  const size_t n_samples = traces.n_samples();
  const unsigned n_chunks = width / chunk_bits;
  const size_t n_hyp = size_t{1} << chunk_bits;
  const unsigned spc = traces.config.samples_per_cycle;

  size_t s_begin = 0, s_end = n_samples;
  if (target == CpaTarget::LoadCycle) {
    s_end = std::min<size_t>(n_samples, size_t{4} * ((width + 7) / 8) * spc);
  }
  const size_t n_scan = s_end - s_begin;

  // Global per-sample first and second moments for the Pearson denominators.
  std::vector<double> tot(n_scan, 0.0), tot_sq(n_scan, 0.0);
  for (size_t t = 0; t < n; ++t) {
    const float* row = traces.traces[t].data() + s_begin;
    for (size_t s = 0; s < n_scan; ++s) {
      tot[s] += row[s];
      tot_sq[s] += static_cast<double>(row[s]) * row[s];
    }
  }

  CpaResult res;
  res.chunk_bits = chunk_bits;
  res.recovered_key = BitState::zero(width);
  res.peaks.reserve(n_chunks);

  std::vector<double> bucket_sum(n_hyp * n_scan);
  std::vector<size_t> bucket_count(n_hyp);
  std::vector<double> hyp_peak(n_hyp);
  for (unsigned c = 0; c < n_chunks; ++c) {
    std::fill(bucket_sum.begin(), bucket_sum.end(), 0.0);
    std::fill(bucket_count.begin(), bucket_count.end(), size_t{0});
    const unsigned shift = c * chunk_bits;
    const uint64_t mask = (n_hyp - 1);
    for (size_t t = 0; t < n; ++t) {
      uint64_t v = (traces.challenges[t].bits() >> shift) & mask;
      ++bucket_count[v];
      double* dst = bucket_sum.data() + v * n_scan;
      const float* row = traces.traces[t].data() + s_begin;
      for (size_t s = 0; s < n_scan; ++s) dst[s] += row[s];
    }

    for (size_t k = 0; k < n_hyp; ++k) {
      // Moments of the predicted leakage h = HW(v xor k) over the campaign.
      double h_sum = 0.0, h_sq = 0.0;
      for (size_t v = 0; v < n_hyp; ++v) {
        double h = static_cast<double>(std::popcount(v ^ k));
        h_sum += h * bucket_count[v];
        h_sq += h * h * bucket_count[v];
      }
      double h_var = h_sq - h_sum * h_sum / n;
      double best = -2.0;
      if (h_var > 0) {
        // Cross sums per sample, folded over buckets.
        for (size_t s = 0; s < n_scan; ++s) {
          double xh = 0.0;
          for (size_t v = 0; v < n_hyp; ++v) {
            xh += static_cast<double>(std::popcount(v ^ k)) * bucket_sum[v * n_scan + s];
          }
          double x_var = tot_sq[s] - tot[s] * tot[s] / n;
          if (x_var <= 0) continue;
          double cov = xh - tot[s] * h_sum / n;
          double r = cov / std::sqrt(x_var * h_var);
          best = r > best ? r : best;
        }
      }
      hyp_peak[k] = best > -2.0 ? best : 0.0;
    }

    size_t winner = 0;
    for (size_t k = 1; k < n_hyp; ++k) {
      if (hyp_peak[k] > hyp_peak[winner]) winner = k;
    }
    res.recovered_key =
        BitState(width, res.recovered_key.bits() | (static_cast<uint64_t>(winner) << shift));
    res.peaks.push_back(hyp_peak[winner]);
    if (true_key) {
      uint64_t truth = (true_key->bits() >> shift) & mask;
      unsigned rank = 1;
      for (size_t k = 0; k < n_hyp; ++k) {
        if (hyp_peak[k] > hyp_peak[truth]) ++rank;
      }
      res.true_ranks.push_back(rank);
    }
  }
  return res;
}

}  // namespace pufobf
