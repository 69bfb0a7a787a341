// Copyright pufobf contributors.
// Licensed under the Apache License, Version 2.0, see LICENSE for details.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "pufobf/avalanche.hpp"
#include "pufobf/bitstate.hpp"
#include "pufobf/cpa.hpp"
#include "pufobf/device.hpp"
#include "pufobf/errors.hpp"
#include "pufobf/leakage.hpp"
#include "pufobf/ml_attack.hpp"

namespace pufobf {

struct IoError : Error {
  using Error::Error;
};

using json = nlohmann::json;

// ---- Enum names -------------------------------------------------------------

inline std::string to_string(Coupling c) {
  return c == Coupling::DroppedBit ? "dropped_bit" : "stage1";
}
inline std::string to_string(KeyMode m) {
  return m == KeyMode::PlainOtp ? "plain_otp" : "shared_otp";
}
inline std::string to_string(LeakModel m) {
  return m == LeakModel::HammingDistance ? "hamming_distance" : "hamming_weight";
}
inline std::string to_string(TraceAlign a) {
  return a == TraceAlign::ReferenceClock ? "reference_clock" : "enabled_cycles_only";
}
inline std::string to_string(CrpMode m) { return m == CrpMode::Raw ? "raw" : "obfuscated"; }

namespace detail {

template <typename T>
T parse_enum(const std::string& s, std::initializer_list<std::pair<const char*, T>> names,
             const char* what) {
  for (const auto& [n, v] : names) {
    if (s == n) return v;
  }
  throw ConfigMismatch(std::string(what) + ": unknown value '" + s + "'");
}

}  // namespace detail

inline Coupling coupling_from_string(const std::string& s) {
  return detail::parse_enum<Coupling>(
      s, {{"dropped_bit", Coupling::DroppedBit}, {"stage1", Coupling::Stage1}}, "coupling");
}
inline KeyMode key_mode_from_string(const std::string& s) {
  return detail::parse_enum<KeyMode>(
      s, {{"plain_otp", KeyMode::PlainOtp}, {"shared_otp", KeyMode::SharedOtp}}, "key mode");
}
inline LeakModel leak_model_from_string(const std::string& s) {
  return detail::parse_enum<LeakModel>(s,
                                       {{"hamming_distance", LeakModel::HammingDistance},
                                        {"hamming_weight", LeakModel::HammingWeight}},
                                       "leak model");
}
inline TraceAlign trace_align_from_string(const std::string& s) {
  return detail::parse_enum<TraceAlign>(s,
                                        {{"reference_clock", TraceAlign::ReferenceClock},
                                         {"enabled_cycles_only", TraceAlign::EnabledCyclesOnly}},
                                        "trace alignment");
}
inline CrpMode crp_mode_from_string(const std::string& s) {
  return detail::parse_enum<CrpMode>(s, {{"raw", CrpMode::Raw}, {"obfuscated", CrpMode::Obfuscated}},
                                     "crp mode");
}

// ---- Feedback / register specs ----------------------------------------------

inline json spec_to_json(const FeedbackSpec& s) {
  json j;
  j["width"] = s.width;
  j["linear_taps"] = s.linear_taps;
  if (s.quadratic_tap) j["quadratic_tap"] = {s.quadratic_tap->first, s.quadratic_tap->second};
  return j;
}

inline FeedbackSpec spec_from_json(const json& j) {
  std::optional<std::pair<unsigned, unsigned>> quad;
  if (j.contains("quadratic_tap")) {
    auto q = j.at("quadratic_tap");
    quad = std::pair<unsigned, unsigned>{q.at(0).get<unsigned>(), q.at(1).get<unsigned>()};
  }
  return FeedbackSpec::make(j.at("width").get<unsigned>(),
                            j.at("linear_taps").get<std::vector<unsigned>>(), quad);
}

inline json casr_to_json(const CasrRule& r) {
  json j;
  j["rules"] = r.rules;
  return j;
}

inline CasrRule casr_from_json(const json& j) {
  return CasrRule::make(j.at("rules").get<std::vector<uint8_t>>());
}

// ---- Device state -----------------------------------------------------------

inline json device_to_json(const Device& d) {
  json j;
  j["keystore"]["mode"] = to_string(d.keystore.mode);
  j["keystore"]["width"] = d.keystore.width();
  j["keystore"]["share1"] = d.keystore.s1.to_hex();
  if (d.keystore.mode == KeyMode::SharedOtp) j["keystore"]["share2"] = d.keystore.s2.to_hex();
  j["spec_a"] = spec_to_json(d.spec_a);
  j["spec_b"] = spec_to_json(d.spec_b);
  j["coupling"] = to_string(d.coupling);
  j["prng_lfsr"] = spec_to_json(d.prng_lfsr);
  j["prng_casr"] = casr_to_json(d.prng_casr);
  json taps = json::array();
  for (const auto& [l, c] : d.prng_taps.outputs) taps.push_back({l, c});
  j["prng_taps"] = taps;
  j["clk_skip_stage"] = d.clk_skip_stage;
  j["votes"] = d.votes;
  j["countermeasures"]["clock_randomization"] = d.cm.clock_randomization;
  j["countermeasures"]["masking"] = d.cm.masking;
  j["apuf"]["seed"] = d.apuf_seed;
  j["apuf"]["sigma_w"] = d.sigma_w;
  j["apuf"]["noise_scale"] = d.noise_scale;
  if (d.enrollment) {
    j["enrollment"]["unstable_challenge"] = d.enrollment->unstable_challenge.to_hex();
    j["enrollment"]["measured_uniformity"] = d.enrollment->measured_uniformity;
  }
  return j;
}

inline Device device_from_json(const json& j) {
  const json& ks = j.at("keystore");
  unsigned kw = ks.at("width").get<unsigned>();
  KeyMode mode = key_mode_from_string(ks.at("mode").get<std::string>());
  KeyStore keystore =
      mode == KeyMode::PlainOtp
          ? KeyStore::plain_otp(BitState::from_hex(kw, ks.at("share1").get<std::string>()))
          : KeyStore::shared_otp(BitState::from_hex(kw, ks.at("share1").get<std::string>()),
                                 BitState::from_hex(kw, ks.at("share2").get<std::string>()));
  PrngTaps taps{};
  const json& jt = j.at("prng_taps");
  if (jt.size() != taps.outputs.size()) {
    throw ConfigMismatch("device file: expected " + std::to_string(taps.outputs.size()) +
                         " PRNG tap pairs");
  }
  for (size_t i = 0; i < taps.outputs.size(); ++i) {
    taps.outputs[i] = {jt.at(i).at(0).get<unsigned>(), jt.at(i).at(1).get<unsigned>()};
  }
  const json& cm = j.at("countermeasures");
  Device d = Device::make(
      std::move(keystore), spec_from_json(j.at("spec_a")), spec_from_json(j.at("spec_b")),
      coupling_from_string(j.at("coupling").get<std::string>()), spec_from_json(j.at("prng_lfsr")),
      casr_from_json(j.at("prng_casr")), taps, j.at("clk_skip_stage").get<unsigned>(),
      j.at("apuf").at("seed").get<uint64_t>(), j.at("apuf").at("sigma_w").get<double>(),
      j.at("apuf").at("noise_scale").get<double>(), j.at("votes").get<unsigned>(),
      Countermeasures{cm.at("clock_randomization").get<bool>(), cm.at("masking").get<bool>()});
  if (j.contains("enrollment")) {
    const json& e = j.at("enrollment");
    d.enrollment = Enrollment{
        BitState::from_hex(d.challenge_width(), e.at("unstable_challenge").get<std::string>()),
        e.at("measured_uniformity").get<double>()};
  }
  return d;
}

// ---- Generic JSON file helpers ----------------------------------------------

inline void write_json_file(const std::string& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open for writing: " + path);
  out << j.dump(2) << '\n';
  if (!out) throw IoError("write failed: " + path);
}

inline json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw IoError("malformed JSON in " + path + ": " + e.what());
  }
  return j;
}

inline void save_device(const std::string& path, const Device& d) {
  write_json_file(path, device_to_json(d));
}

inline Device load_device(const std::string& path) {
  return device_from_json(read_json_file(path));
}

// ---- Trace set: binary rows + JSON sidecar ----------------------------------

inline constexpr uint16_t kTraceFormatVersion = 1;

// Header: magic "PUFT", u16 version, u32 n_traces, u32 n_samples, all
// little-endian, then row-major float32 samples. Challenges and acquisition
// settings ride in a sidecar JSON next to the binary.
inline void write_trace_set(const std::string& path, const TraceSet& set) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path);
  const char magic[4] = {'P', 'U', 'F', 'T'};
  out.write(magic, 4);
  auto put16 = [&](uint16_t v) {
    char b[2] = {static_cast<char>(v & 0xff), static_cast<char>(v >> 8)};
    out.write(b, 2);
  };
  auto put32 = [&](uint32_t v) {
    char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
    out.write(b, 4);
  };
  put16(kTraceFormatVersion);
  put32(static_cast<uint32_t>(set.n_traces()));
  put32(static_cast<uint32_t>(set.n_samples()));
  for (const auto& row : set.traces) {
    static_assert(sizeof(float) == 4);
    out.write(reinterpret_cast<const char*>(row.data()),
              static_cast<std::streamsize>(row.size() * 4));
  }
  if (!out) throw IoError("write failed: " + path);

  json side;
  side["config"]["model"] = to_string(set.config.model);
  side["config"]["noise_sigma"] = set.config.noise_sigma;
  side["config"]["samples_per_cycle"] = set.config.samples_per_cycle;
  side["config"]["align"] = to_string(set.config.align);
  side["countermeasures"]["clock_randomization"] = set.countermeasures.clock_randomization;
  side["countermeasures"]["masking"] = set.countermeasures.masking;
  json ch = json::array();
  for (const BitState& c : set.challenges) ch.push_back(c.to_hex());
  side["challenge_width"] = set.challenges.empty() ? 0u : set.challenges.front().width();
  side["challenges"] = ch;
  side["responses"] = set.responses;
  write_json_file(path + ".json", side);
}

inline TraceSet read_trace_set(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open: " + path);
  char magic[4];
  in.read(magic, 4);
  if (!in || magic[0] != 'P' || magic[1] != 'U' || magic[2] != 'F' || magic[3] != 'T') {
    throw IoError("not a trace file (bad magic): " + path);
  }
  auto get16 = [&]() -> uint16_t {
    unsigned char b[2];
    in.read(reinterpret_cast<char*>(b), 2);
    return static_cast<uint16_t>(b[0] | (b[1] << 8));
  };
  auto get32 = [&]() -> uint32_t {
    unsigned char b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(b[i]) << (8 * i);
    return v;
  };
  uint16_t version = get16();
  if (version != kTraceFormatVersion) {
    throw IoError("unsupported trace file version " + std::to_string(version) + ": " + path);
  }
  uint32_t n_traces = get32();
  uint32_t n_samples = get32();
  if (!in) throw IoError("truncated trace header: " + path);

  TraceSet set;
  set.traces.resize(n_traces);
  for (auto& row : set.traces) {
    row.resize(n_samples);
    in.read(reinterpret_cast<char*>(row.data()), static_cast<std::streamsize>(n_samples) * 4);
    if (!in) throw IoError("truncated trace data: " + path);
  }

  json side = read_json_file(path + ".json");
  set.config = LeakageConfig::make(
      leak_model_from_string(side.at("config").at("model").get<std::string>()),
      side.at("config").at("noise_sigma").get<double>(),
      side.at("config").at("samples_per_cycle").get<unsigned>(),
      trace_align_from_string(side.at("config").at("align").get<std::string>()));
  set.countermeasures.clock_randomization =
      side.at("countermeasures").at("clock_randomization").get<bool>();
  set.countermeasures.masking = side.at("countermeasures").at("masking").get<bool>();
  unsigned cw = side.at("challenge_width").get<unsigned>();
  for (const auto& h : side.at("challenges")) {
    set.challenges.push_back(BitState::from_hex(cw, h.get<std::string>()));
  }
  if (side.contains("responses")) {
    set.responses = side.at("responses").get<std::vector<uint8_t>>();
  }
  if (set.challenges.size() != set.traces.size()) {
    throw IoError("challenge count does not match trace count: " + path);
  }
  return set;
}

// ---- CRP dataset: CSV -------------------------------------------------------

inline void write_crps(const std::string& path, const CrpSet& crps) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open for writing: " + path);
  out << "challenge_hex,response\n";
  for (size_t i = 0; i < crps.size(); ++i) {
    out << crps.challenges[i].to_hex() << ',' << (crps.responses[i] ? '1' : '0') << '\n';
  }
  if (!out) throw IoError("write failed: " + path);
}

inline CrpSet read_crps(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open: " + path);
  std::string line;
  if (!std::getline(in, line) || line != "challenge_hex,response") {
    throw IoError("bad CRP header in " + path);
  }
  CrpSet crps;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    size_t comma = line.find(',');
    if (comma == std::string::npos || comma + 2 != line.size()) {
      throw IoError("malformed CRP row in " + path + ": " + line);
    }
    std::string hex = line.substr(0, comma);
    char r = line[comma + 1];
    if (r != '0' && r != '1') throw IoError("bad response bit in " + path + ": " + line);
    unsigned width = static_cast<unsigned>(hex.size() * 4);
    if (crps.width == 0) {
      crps.width = width;
    } else if (width != ((crps.width + 3) / 4) * 4) {
      throw IoError("inconsistent challenge width in " + path + ": " + line);
    }
    crps.challenges.push_back(BitState::from_hex(crps.width, hex));
    crps.responses.push_back(r == '1' ? 1u : 0u);
  }
  return crps;
}

// ---- Attack reports ---------------------------------------------------------

inline void write_avalanche_csv(const std::string& path, const AvalancheReport& rep) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open for writing: " + path);
  for (size_t row = 0; row < rep.toggle_bits.size(); ++row) {
    for (unsigned j = 0; j < rep.width; ++j) {
      out << (j ? "," : "") << rep.at(static_cast<unsigned>(row), j);
    }
    out << '\n';
  }
  if (!out) throw IoError("write failed: " + path);
}

inline json avalanche_summary_json(const AvalancheReport& rep) {
  double sum = 0.0;
  for (double v : rep.p) sum += v;
  json j;
  j["width"] = rep.width;
  j["n_pairs"] = rep.n_pairs;
  j["toggle_bits"] = rep.toggle_bits;
  j["min_entry"] = rep.min_entry();
  j["max_entry"] = rep.max_entry();
  j["mean_entry"] = rep.p.empty() ? 0.0 : sum / static_cast<double>(rep.p.size());
  return j;
}

inline json cpa_result_json(const CpaResult& res) {
  json j;
  j["recovered_key"] = res.recovered_key.to_hex();
  j["chunk_bits"] = res.chunk_bits;
  j["peaks"] = res.peaks;
  if (!res.true_ranks.empty()) {
    j["true_ranks"] = res.true_ranks;
    j["mean_true_rank"] = res.mean_true_rank();
  }
  return j;
}

inline json ml_result_json(const MlAttackResult& res) {
  json j;
  j["hidden_layers"] = res.hidden;
  j["epochs"] = res.epochs;
  j["learning_rate"] = res.learning_rate;
  j["train_n"] = res.train_n;
  j["test_n"] = res.test_n;
  j["train_accuracy"] = res.train_accuracy;
  j["test_accuracy"] = res.test_accuracy;
  j["final_loss"] = res.final_loss;
  return j;
}

}  // namespace pufobf
