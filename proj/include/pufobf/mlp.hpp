// Copyright pufobf contributors.
// Licensed under the Apache License, Version 2.0, see LICENSE for details.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <stdexcept>
#include <vector>

#include "pufobf/errors.hpp"

namespace pufobf {

// Small dense feed-forward binary classifier: tanh hidden layers, one
// logistic output unit, binary cross-entropy loss, plain SGD with momentum.
// Float32 throughout; weights row-major (out x in) so the inner products run
// over contiguous memory.
struct MlpConfig {
  std::vector<unsigned> hidden{64, 64, 64, 64};
  unsigned epochs = 30;
  double learning_rate = 0.05;
  double momentum = 0.9;
  unsigned batch_size = 64;

  static MlpConfig make(std::vector<unsigned> hidden, unsigned epochs, double learning_rate,
                        double momentum, unsigned batch_size) {
    if (epochs < 1) throw std::invalid_argument("MlpConfig: epochs must be >= 1");
    if (learning_rate <= 0) throw std::invalid_argument("MlpConfig: learning rate must be > 0");
    if (momentum < 0 || momentum >= 1) {
      throw std::invalid_argument("MlpConfig: momentum must be in [0, 1)");
    }
    if (batch_size < 1) throw std::invalid_argument("MlpConfig: batch size must be >= 1");
    for (unsigned h : hidden) {
      if (h < 1) throw std::invalid_argument("MlpConfig: hidden sizes must be >= 1");
    }
    return MlpConfig{std::move(hidden), epochs, learning_rate, momentum, batch_size};
  }
};

struct MlpModel {
  std::vector<unsigned> dims;            // input, hidden..., 1
  std::vector<std::vector<float>> W;     // per layer, dims[l+1] x dims[l]
  std::vector<std::vector<float>> bias;  // per layer, dims[l+1]
};

inline MlpModel mlp_init(unsigned n_inputs, const std::vector<unsigned>& hidden, uint64_t seed) {
  if (n_inputs == 0) throw std::invalid_argument("mlp_init: need at least one input");
  MlpModel m;
  m.dims.push_back(n_inputs);
  for (unsigned h : hidden) m.dims.push_back(h);
  m.dims.push_back(1);
  std::mt19937_64 gen(seed);
  for (size_t l = 0; l + 1 < m.dims.size(); ++l) {
    unsigned fan_in = m.dims[l], fan_out = m.dims[l + 1];
    float scale = std::sqrt(6.0f / static_cast<float>(fan_in + fan_out));
    std::uniform_real_distribution<float> u(-scale, scale);
    std::vector<float> w(static_cast<size_t>(fan_out) * fan_in);
    for (float& v : w) v = u(gen);
    m.W.push_back(std::move(w));
    m.bias.emplace_back(fan_out, 0.0f);
  }
  return m;
}

namespace detail {

inline float sigmoid(float z) { return 1.0f / (1.0f + std::exp(-z)); }

// Forward pass of one batch. acts[0] aliases the input rows; acts[l+1] holds
// layer l's outputs, batch-major.
inline void mlp_forward(const MlpModel& m, const float* x, size_t batch,
                        std::vector<std::vector<float>>& acts) {
  size_t n_layers = m.W.size();
  acts.resize(n_layers + 1);
  acts[0].assign(x, x + batch * m.dims[0]);
  for (size_t l = 0; l < n_layers; ++l) {
    unsigned in = m.dims[l], out = m.dims[l + 1];
    acts[l + 1].assign(batch * out, 0.0f);
    for (size_t b = 0; b < batch; ++b) {
      const float* src = acts[l].data() + b * in;
      float* dst = acts[l + 1].data() + b * out;
      for (unsigned o = 0; o < out; ++o) {
        const float* wr = m.W[l].data() + static_cast<size_t>(o) * in;
        float z = m.bias[l][o];
        for (unsigned i = 0; i < in; ++i) z += wr[i] * src[i];
        dst[o] = l + 1 == n_layers ? sigmoid(z) : std::tanh(z);
      }
    }
  }
}

}  // namespace detail

inline std::vector<float> mlp_predict(const MlpModel& m, const std::vector<float>& x,
                                      size_t n_rows) {
  if (n_rows == 0) return {};
  if (x.size() != n_rows * m.dims.front()) {
    throw std::invalid_argument("mlp_predict: feature matrix shape mismatch");
  }
  std::vector<std::vector<float>> acts;
  std::vector<float> out;
  out.reserve(n_rows);
  const size_t chunk = 256;
  for (size_t at = 0; at < n_rows; at += chunk) {
    size_t batch = std::min(chunk, n_rows - at);
    detail::mlp_forward(m, x.data() + at * m.dims.front(), batch, acts);
    out.insert(out.end(), acts.back().begin(), acts.back().end());
  }
  return out;
}

inline double mlp_accuracy(const MlpModel& m, const std::vector<float>& x,
                           const std::vector<uint8_t>& y) {
  if (y.empty()) throw std::invalid_argument("mlp_accuracy: empty label set");
  auto p = mlp_predict(m, x, y.size());
  size_t hits = 0;
  for (size_t i = 0; i < y.size(); ++i) hits += (p[i] > 0.5f) == (y[i] != 0);
  return static_cast<double>(hits) / static_cast<double>(y.size());
}

// One pass over the data in the given order. Returns the mean binary
// cross-entropy; throws DivergedTraining if it stops being finite.
inline double mlp_train_epoch(MlpModel& m, const std::vector<float>& x,
                              const std::vector<uint8_t>& y, const std::vector<uint32_t>& order,
                              const MlpConfig& cfg, std::vector<std::vector<float>>& vel_w,
                              std::vector<std::vector<float>>& vel_b) {
  const unsigned in_dim = m.dims.front();
  const size_t n_layers = m.W.size();
  if (vel_w.empty()) {
    for (size_t l = 0; l < n_layers; ++l) {
      vel_w.emplace_back(m.W[l].size(), 0.0f);
      vel_b.emplace_back(m.bias[l].size(), 0.0f);
    }
  }
  std::vector<std::vector<float>> acts, deltas(n_layers);
  std::vector<float> batch_x(static_cast<size_t>(cfg.batch_size) * in_dim);
  std::vector<std::vector<float>> grad_w(n_layers), grad_b(n_layers);
  for (size_t l = 0; l < n_layers; ++l) {
    grad_w[l].resize(m.W[l].size());
    grad_b[l].resize(m.bias[l].size());
  }

  double loss_sum = 0.0;
  size_t loss_n = 0;
  for (size_t at = 0; at < order.size(); at += cfg.batch_size) {
    size_t batch = std::min<size_t>(cfg.batch_size, order.size() - at);
    for (size_t b = 0; b < batch; ++b) {
      const float* src = x.data() + static_cast<size_t>(order[at + b]) * in_dim;
      std::copy(src, src + in_dim, batch_x.data() + b * in_dim);
    }
    detail::mlp_forward(m, batch_x.data(), batch, acts);

    // Output deltas: logistic + cross-entropy gives (p - y).
    deltas[n_layers - 1].assign(batch, 0.0f);
    for (size_t b = 0; b < batch; ++b) {
      float p = acts[n_layers][b];
      float label = y[order[at + b]] ? 1.0f : 0.0f;
      deltas[n_layers - 1][b] = p - label;
      float eps = 1e-7f;
      loss_sum += -(label * std::log(p + eps) + (1.0f - label) * std::log(1.0f - p + eps));
    }
    loss_n += batch;

    // Backpropagate through the tanh stack.
    for (size_t l = n_layers - 1; l > 0; --l) {
      unsigned out = m.dims[l + 1], in = m.dims[l];
      deltas[l - 1].assign(batch * in, 0.0f);
      for (size_t b = 0; b < batch; ++b) {
        const float* dl = deltas[l].data() + b * out;
        const float* a = acts[l].data() + b * in;
        float* dprev = deltas[l - 1].data() + b * in;
        for (unsigned o = 0; o < out; ++o) {
          const float* wr = m.W[l].data() + static_cast<size_t>(o) * in;
          float d = dl[o];
          for (unsigned i = 0; i < in; ++i) dprev[i] += d * wr[i];
        }
        for (unsigned i = 0; i < in; ++i) dprev[i] *= 1.0f - a[i] * a[i];
      }
    }

    for (size_t l = 0; l < n_layers; ++l) {
      unsigned out = m.dims[l + 1], in = m.dims[l];
      std::fill(grad_w[l].begin(), grad_w[l].end(), 0.0f);
      std::fill(grad_b[l].begin(), grad_b[l].end(), 0.0f);
      for (size_t b = 0; b < batch; ++b) {
        const float* dl = deltas[l].data() + b * out;
        const float* a = acts[l].data() + b * in;
        for (unsigned o = 0; o < out; ++o) {
          float d = dl[o];
          float* g = grad_w[l].data() + static_cast<size_t>(o) * in;
          for (unsigned i = 0; i < in; ++i) g[i] += d * a[i];
          grad_b[l][o] += d;
        }
      }
      float scale = static_cast<float>(cfg.learning_rate / static_cast<double>(batch));
      float mu = static_cast<float>(cfg.momentum);
      for (size_t i = 0; i < m.W[l].size(); ++i) {
        vel_w[l][i] = mu * vel_w[l][i] - scale * grad_w[l][i];
        m.W[l][i] += vel_w[l][i];
      }
      for (size_t i = 0; i < m.bias[l].size(); ++i) {
        vel_b[l][i] = mu * vel_b[l][i] - scale * grad_b[l][i];
        m.bias[l][i] += vel_b[l][i];
      }
    }
  }
  double mean_loss = loss_sum / static_cast<double>(loss_n);
  if (!std::isfinite(mean_loss)) {
    throw DivergedTraining("mlp_train_epoch: loss is not finite");
  }
  return mean_loss;
}

}  // namespace pufobf
