// Copyright pufobf contributors.
// Licensed under the Apache License, Version 2.0, see LICENSE for details.
// SPDX-License-Identifier: Apache-2.0
//
// Command-line driver. Subcommands are thin wrappers over the library; every
// experiment takes an explicit seed and echoes its resolved configuration so
// runs can be reproduced byte for byte. Values resolve in fixed precedence:
// built-in defaults, then the --config JSON file, then PUFOBF_* environment
// variables, then command-line flags.

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "pufobf/io.hpp"
#include "pufobf/period.hpp"
#include "pufobf/protocol.hpp"

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

// Exit codes: 0 success, 1 acceptance/search failure, 2 config error, 3 I/O.
struct ExitWith : std::runtime_error {
  int code;
  ExitWith(int code, const std::string& msg) : std::runtime_error(msg), code(code) {}
};

std::string underscored(std::string s) {
  std::replace(s.begin(), s.end(), '-', '_');
  return s;
}

std::string env_name(const std::string& key) {
  std::string e = "PUFOBF_" + key;
  std::transform(e.begin(), e.end(), e.begin(), [](unsigned char c) { return std::toupper(c); });
  return e;
}

// Maps config-file keys onto the same variables the flags bind to. A key may
// feed several subcommands (e.g. "device"); only the running one reads it.
struct ConfigRegistry {
  std::map<std::string, std::vector<std::function<void(const json&)>>> setters;

  template <typename T>
  void bind(const std::string& key, T& var) {
    setters[key].push_back([&var, key](const json& v) {
      try {
        var = v.get<T>();
      } catch (const json::exception&) {
        throw ExitWith(2, "config field '" + key + "': wrong type");
      }
    });
  }

  void apply(const json& cfg, const std::string& path) {
    if (!cfg.is_object()) throw ExitWith(2, "config file " + path + ": expected a JSON object");
    for (const auto& [k, v] : cfg.items()) {
      auto it = setters.find(k);
      if (it == setters.end()) throw ExitWith(2, "config: unknown field '" + k + "'");
      for (const auto& set : it->second) set(v);
    }
  }
};

template <typename T>
CLI::Option* add_opt(CLI::App* cmd, ConfigRegistry& reg, const std::string& flag, T& var,
                     const std::string& help) {
  std::string key = underscored(flag);
  reg.bind(key, var);
  return cmd->add_option("--" + flag, var, help)->envname(env_name(key));
}

struct GlobalOptions {
  std::string config_path;
  uint64_t seed = 1;
  std::string out_dir = ".";
  unsigned threads = 1;
};

fs::path out_path(const GlobalOptions& g, const std::string& name) {
  std::error_code ec;
  fs::create_directories(g.out_dir, ec);
  if (ec) throw ExitWith(3, "cannot create output directory " + g.out_dir);
  return fs::path(g.out_dir) / name;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw ExitWith(3, "cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw ExitWith(3, "short write to " + path.string());
}

// Diagnostics stream, so machine-readable stdout stays clean.
void echo_config(const std::string& subcommand, const GlobalOptions& g, json fields) {
  fields["subcommand"] = subcommand;
  fields["seed"] = g.seed;
  fields["out"] = g.out_dir;
  fields["threads"] = g.threads;
  std::fprintf(stderr, "config: %s\n", fields.dump().c_str());
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> parts;
  std::string cur;
  for (char c : s) {
    if (c == ',') {
      if (!cur.empty()) parts.push_back(cur);
      cur.clear();
    } else if (!std::isspace(static_cast<unsigned char>(c))) {
      cur.push_back(c);
    }
  }
  if (!cur.empty()) parts.push_back(cur);
  return parts;
}

std::vector<unsigned> parse_unsigned_list(const std::string& s, const char* field) {
  std::vector<unsigned> out;
  for (const std::string& tok : split_list(s)) {
    try {
      size_t used = 0;
      unsigned long v = std::stoul(tok, &used);
      if (used != tok.size()) throw std::invalid_argument(tok);
      out.push_back(static_cast<unsigned>(v));
    } catch (const std::exception&) {
      throw ExitWith(2, std::string(field) + ": not a number: '" + tok + "'");
    }
  }
  return out;
}

// Devices not loaded from a file are derived from the seed alone, on a
// stream separate from the run RNG so experiment draws never shift the
// device identity.
pufobf::Device make_default_device(uint64_t seed, pufobf::Countermeasures cm) {
  pufobf::Rng rng = pufobf::make_rng(seed ^ 0x9e3779b97f4a7c15ull);
  pufobf::BitState key = pufobf::random_state(56, rng);
  uint64_t apuf_seed = rng();
  pufobf::KeyStore ks = cm.masking
                            ? [&] {
                                pufobf::BitState r = pufobf::random_state(56, rng);
                                return pufobf::KeyStore::shared_otp(key ^ r, r);
                              }()
                            : pufobf::KeyStore::plain_otp(key);
  return pufobf::default_device(std::move(ks), cm, apuf_seed);
}

pufobf::Device load_or_default(const std::string& path, uint64_t seed,
                               pufobf::Countermeasures cm) {
  return path.empty() ? make_default_device(seed, cm) : pufobf::load_device(path);
}

// ---- search-specs -------------------------------------------------------

void cmd_search_specs(const GlobalOptions& global, const std::string& kind, unsigned width,
                      uint64_t trials) {
  echo_config("search-specs", global,
              {{"kind", kind}, {"width", width}, {"trials", trials}});
  json result;
  try {
    if (kind == "nlfsr" || kind == "lfsr") {
      pufobf::SpecSearchResult r = kind == "nlfsr"
                                       ? pufobf::find_max_length_nlfsr(width, trials, global.seed)
                                       : pufobf::find_max_length_lfsr(width, trials, global.seed);
      uint64_t period = r.period;
      if (width <= pufobf::kMaxWalkWidth) period = pufobf::verify_period(r.spec);
      if (period != r.period) throw ExitWith(1, "search-specs: period re-verification mismatch");
      result["spec"] = pufobf::spec_to_json(r.spec);
      result["period"] = period;
      result["trials_used"] = r.trials_used;
    } else if (kind == "casr") {
      pufobf::CasrSearchResult r = pufobf::find_max_length_casr(width, trials, global.seed);
      uint64_t period = width <= pufobf::kMaxWalkWidth ? pufobf::verify_period(r.rule) : r.period;
      if (period != r.period) throw ExitWith(1, "search-specs: period re-verification mismatch");
      result["rule"] = r.rule.rules;
      result["period"] = period;
      result["trials_used"] = r.trials_used;
    } else {
      throw ExitWith(2, "kind: must be nlfsr, lfsr or casr, got '" + kind + "'");
    }
  } catch (const pufobf::TrialsExhausted& e) {
    throw ExitWith(1, e.what());
  }
  result["kind"] = kind;
  result["width"] = width;
  result["seed"] = global.seed;
  result["max_trials"] = trials;
  std::string text = result.dump(2) + "\n";
  std::fputs(text.c_str(), stdout);
  write_text(out_path(global, "spec_" + kind + "_w" + std::to_string(width) + ".json"), text);
}

// ---- avalanche ----------------------------------------------------------

void cmd_avalanche(const GlobalOptions& global, unsigned n, unsigned warmup, unsigned flush,
                   const std::string& control, const std::string& toggles_str,
                   const std::string& device_path) {
  echo_config("avalanche", global,
              {{"n", n},
               {"warmup", warmup},
               {"flush", flush},
               {"control", control},
               {"toggles", toggles_str},
               {"device", device_path}});
  std::vector<std::string> runs;
  if (control == "both") {
    runs = {"nlfsr", "lfsr"};
  } else if (control == "nlfsr" || control == "lfsr") {
    runs = {control};
  } else {
    throw ExitWith(2, "control: must be nlfsr, lfsr or both, got '" + control + "'");
  }
  std::vector<unsigned> toggles = parse_unsigned_list(toggles_str, "toggles");
  pufobf::Device d = load_or_default(device_path, global.seed, {});
  unsigned width = d.challenge_width();
  pufobf::Schedule sched;
  sched.warmup = warmup;
  sched.flush = flush;

  bool nlfsr_pass = true;
  bool nlfsr_ran = false;
  for (const std::string& run : runs) {
    // Fresh RNG per run: each control's matrix is identical whether it runs
    // alone or as part of "both".
    pufobf::Rng rng = pufobf::make_rng(global.seed);
    pufobf::AvalancheReport rep;
    if (run == "nlfsr") {
      auto obf = [&](const pufobf::BitState& key, const pufobf::BitState& c) {
        return pufobf::obfuscate(d.spec_a, d.spec_b, d.coupling, key, c, 1, sched)[0];
      };
      rep = pufobf::avalanche_test(obf, width, n, toggles, rng);
    } else {
      pufobf::FeedbackSpec lin = pufobf::control_lfsr_spec();
      if (lin.width != width) {
        throw ExitWith(2, "control: lfsr control is " + std::to_string(lin.width) +
                              " stages but the device challenge is " + std::to_string(width));
      }
      auto obf = [&](const pufobf::BitState& key, const pufobf::BitState& c) {
        uint64_t s = (key ^ c).bits();
        for (unsigned i = 0; i < warmup + flush; ++i) s = pufobf::detail::shift_step_raw(lin, s);
        return pufobf::BitState(width, s);
      };
      rep = pufobf::avalanche_test(obf, width, n, toggles, rng);
    }

    bool in_band = rep.min_entry() >= 0.48 && rep.max_entry() <= 0.52;
    if (run == "nlfsr") {
      nlfsr_ran = true;
      nlfsr_pass = in_band;
    }
    json summary = pufobf::avalanche_summary_json(rep);
    summary["control"] = run;
    summary["warmup"] = warmup;
    summary["flush"] = flush;
    summary["band"] = {0.48, 0.52};
    summary["sac_pass"] = in_band;
    summary["flag"] = in_band ? "PASS" : "FAIL-SAC";

    std::ostringstream csv;
    csv.precision(17);
    for (size_t row = 0; row < rep.toggle_bits.size(); ++row) {
      for (unsigned j = 0; j < rep.width; ++j) {
        csv << (j ? "," : "") << rep.at(static_cast<unsigned>(row), j);
      }
      csv << '\n';
    }
    write_text(out_path(global, "avalanche_" + run + ".csv"), csv.str());
    write_text(out_path(global, "avalanche_" + run + ".json"), summary.dump(2) + "\n");
    std::printf("avalanche %s: min=%.4f max=%.4f mean=%.4f %s\n", run.c_str(), rep.min_entry(),
                rep.max_entry(), summary["mean_entry"].get<double>(),
                in_band ? "PASS" : "FAIL-SAC");
  }
  if (nlfsr_ran && !nlfsr_pass) {
    throw ExitWith(1, "avalanche: flip probabilities leave the [0.48, 0.52] band");
  }
}

// ---- sca ----------------------------------------------------------------

struct ScaOptions {
  std::string cells = "all";
  std::string device;
  unsigned traces = 10000;
  double noise_sigma = 0.5;
  unsigned samples_per_cycle = 1;
  std::string model = "hamming_distance";
  std::string align = "reference_clock";
  std::string target = "load_cycle";
  unsigned chunk_bits = 8;
  bool save_traces = false;
};

void cmd_sca(const GlobalOptions& global, const ScaOptions& o) {
  echo_config("sca", global,
              {{"countermeasures", o.cells},
               {"device", o.device},
               {"traces", o.traces},
               {"noise_sigma", o.noise_sigma},
               {"samples_per_cycle", o.samples_per_cycle},
               {"model", o.model},
               {"align", o.align},
               {"target", o.target},
               {"chunk_bits", o.chunk_bits},
               {"save_traces", o.save_traces}});
  const std::vector<std::pair<std::string, pufobf::Countermeasures>> all_cells = {
      {"none", {false, false}},
      {"clkrnd", {true, false}},
      {"masked", {false, true}},
      {"masked+clkrnd", {true, true}},
  };
  auto cell_cm = [&](const std::string& name) {
    for (const auto& [n, cm] : all_cells) {
      if (n == name) return cm;
    }
    throw ExitWith(2, "countermeasures: unknown cell '" + name +
                          "' (expected none, clkrnd, masked, masked+clkrnd or all)");
  };
  std::vector<std::string> cells;
  if (o.cells == "all") {
    for (const auto& [name, cm] : all_cells) cells.push_back(name);
  } else {
    for (const std::string& name : split_list(o.cells)) {
      cell_cm(name);
      cells.push_back(name);
    }
  }
  if (cells.empty()) throw ExitWith(2, "countermeasures: empty cell list");

  pufobf::LeakageConfig cfg =
      pufobf::LeakageConfig::make(pufobf::leak_model_from_string(o.model), o.noise_sigma,
                                  o.samples_per_cycle, pufobf::trace_align_from_string(o.align));
  pufobf::CpaTarget target;
  if (o.target == "load_cycle") {
    target = pufobf::CpaTarget::LoadCycle;
  } else if (o.target == "full_trace") {
    target = pufobf::CpaTarget::FullTrace;
  } else {
    throw ExitWith(2, "target: must be load_cycle or full_trace, got '" + o.target + "'");
  }

  pufobf::Device base = load_or_default(o.device, global.seed, {});
  pufobf::BitState key = base.keystore.logical_key();

  std::ostringstream table;
  table << "cell,traces,chunk_bits,mean_true_rank,full_recovery,max_peak\n";
  json summary = json::array();
  for (const std::string& name : cells) {
    pufobf::Countermeasures cm = cell_cm(name);
    // Fresh RNG per cell: results are comparable and independent of which
    // cells were requested together.
    pufobf::Rng rng = pufobf::make_rng(global.seed);
    pufobf::KeyStore ks = cm.masking ? [&] {
      pufobf::BitState r = pufobf::random_state(key.width(), rng);
      return pufobf::KeyStore::shared_otp(key ^ r, r);
    }()
                                     : pufobf::KeyStore::plain_otp(key);
    pufobf::Device d = pufobf::Device::make(
        std::move(ks), base.spec_a, base.spec_b, base.coupling, base.prng_lfsr, base.prng_casr,
        base.prng_taps, base.clk_skip_stage, base.apuf_seed, base.sigma_w, base.noise_scale,
        base.votes, cm);
    d.enrollment = base.enrollment;
    // Masked runs seed their PRNG from the enrolled unstable challenge.
    if (cm.masking && !d.enrollment) {
      d = pufobf::enroll(std::move(d), 500, 11, 10000, rng);
    }

    pufobf::TraceSet ts = pufobf::collect_traces(d, o.traces, cfg, rng);
    pufobf::CpaResult res = pufobf::cpa_attack(ts, o.chunk_bits, target, key);
    bool recovered = res.full_recovery(key);
    double max_peak = res.peaks.empty() ? 0.0 : *std::max_element(res.peaks.begin(), res.peaks.end());

    json cell = pufobf::cpa_result_json(res);
    cell["cell"] = name;
    cell["countermeasures"] = {{"clock_randomization", cm.clock_randomization},
                               {"masking", cm.masking}};
    cell["traces"] = o.traces;
    cell["full_recovery"] = recovered;
    write_text(out_path(global, "sca_" + name + ".json"), cell.dump(2) + "\n");
    if (o.save_traces) {
      pufobf::write_trace_set(out_path(global, "traces_" + name + ".bin").string(), ts);
    }

    table << name << ',' << o.traces << ',' << o.chunk_bits << ',' << res.mean_true_rank() << ','
          << (recovered ? 1 : 0) << ',' << max_peak << '\n';
    summary.push_back({{"cell", name},
                       {"traces", o.traces},
                       {"mean_true_rank", res.mean_true_rank()},
                       {"full_recovery", recovered},
                       {"max_peak", max_peak}});
    std::printf("sca %-14s traces=%u mean_true_rank=%7.2f full_recovery=%s max_peak=%.4f\n",
                name.c_str(), o.traces, res.mean_true_rank(), recovered ? "yes" : "no", max_peak);
  }
  write_text(out_path(global, "sca_summary.csv"), table.str());
  write_text(out_path(global, "sca_summary.json"), summary.dump(2) + "\n");
}

// ---- crps ---------------------------------------------------------------

void cmd_crps(const GlobalOptions& global, const std::string& device_path, unsigned n,
              const std::string& mode_str) {
  echo_config("crps", global, {{"device", device_path}, {"n", n}, {"mode", mode_str}});
  pufobf::CrpMode mode = pufobf::crp_mode_from_string(mode_str);
  pufobf::Device d = load_or_default(device_path, global.seed, {});
  pufobf::Rng rng = pufobf::make_rng(global.seed);
  pufobf::CrpSet crps = pufobf::collect_crps(d, n, mode, rng);
  fs::path path = out_path(global, "crps.csv");
  pufobf::write_crps(path.string(), crps);
  std::printf("wrote %zu %s crps to %s\n", crps.size(), mode_str.c_str(), path.string().c_str());
}

// ---- ml -----------------------------------------------------------------

struct MlOptions {
  std::string crps;
  std::string hidden = "64,64,64,64";
  unsigned epochs = 30;
  double learning_rate = 0.05;
  double momentum = 0.9;
  unsigned batch_size = 64;
  double test_fraction = 0.2;
};

void cmd_ml(const GlobalOptions& global, const MlOptions& o) {
  echo_config("ml", global,
              {{"crps", o.crps},
               {"hidden", o.hidden},
               {"epochs", o.epochs},
               {"learning_rate", o.learning_rate},
               {"momentum", o.momentum},
               {"batch_size", o.batch_size},
               {"test_fraction", o.test_fraction}});
  std::string path = o.crps.empty() ? out_path(global, "crps.csv").string() : o.crps;
  pufobf::CrpSet crps = pufobf::read_crps(path);
  pufobf::MlpConfig cfg = pufobf::MlpConfig::make(parse_unsigned_list(o.hidden, "hidden"),
                                                  o.epochs, o.learning_rate, o.momentum,
                                                  o.batch_size);
  if (o.test_fraction <= 0.0 || o.test_fraction >= 1.0) {
    throw ExitWith(2, "test_fraction: must be in (0, 1)");
  }
  pufobf::MlAttackResult res = pufobf::train_ml_attack(crps, cfg, global.seed, o.test_fraction);
  json j = pufobf::ml_result_json(res);
  j["crps"] = path;
  write_text(out_path(global, "ml_result.json"), j.dump(2) + "\n");
  std::printf("ml: train_n=%zu test_n=%zu train_accuracy=%.4f test_accuracy=%.4f loss=%.4f\n",
              res.train_n, res.test_n, res.train_accuracy, res.test_accuracy, res.final_loss);
}

// ---- eval ---------------------------------------------------------------

void cmd_eval(const GlobalOptions& global, const std::string& device_path,
              const std::string& challenge_hex, unsigned bits, const std::string& format) {
  echo_config("eval", global,
              {{"device", device_path},
               {"challenge", challenge_hex},
               {"bits", bits},
               {"format", format}});
  if (challenge_hex.empty()) throw ExitWith(2, "challenge: required (hex string)");
  if (format != "bits" && format != "hex") {
    throw ExitWith(2, "format: must be bits or hex, got '" + format + "'");
  }
  if (bits < 1) throw ExitWith(2, "bits: must be >= 1");
  pufobf::Device d = load_or_default(device_path, global.seed, {});
  pufobf::BitState challenge = pufobf::BitState::zero(d.challenge_width());
  try {
    challenge = pufobf::BitState::from_hex(d.challenge_width(), challenge_hex);
  } catch (const std::exception& e) {
    throw ExitWith(2, std::string("challenge: ") + e.what());
  }
  pufobf::Rng rng = pufobf::make_rng(global.seed);
  pufobf::EvalResult res = d.cm.masking ? pufobf::evaluate_masked(d, challenge, bits, rng)
                                        : pufobf::evaluate_plain(d, challenge, bits, rng);
  if (res.transcript.zero_state) {
    std::fprintf(stderr,
                 "warning: zero-state obfuscation: key xor challenge is all zero, the register "
                 "never leaves the zero state\n");
  }
  if (format == "bits") {
    std::string line(res.responses.size(), '0');
    for (size_t i = 0; i < res.responses.size(); ++i) line[i] = res.responses[i] ? '1' : '0';
    std::printf("%s\n", line.c_str());
  } else {
    if (bits > 64) throw ExitWith(2, "format: hex output supports at most 64 bits");
    uint64_t packed = 0;
    for (size_t i = 0; i < res.responses.size(); ++i) {
      packed |= static_cast<uint64_t>(res.responses[i] & 1u) << i;
    }
    std::printf("%s\n", pufobf::BitState(bits, packed).to_hex().c_str());
  }
}

// ---- enroll -------------------------------------------------------------

void cmd_enroll(const GlobalOptions& global, const std::string& device_path, unsigned trials,
                unsigned evals_per_trial, unsigned uniformity_n, bool masking, bool clkrnd) {
  echo_config("enroll", global,
              {{"device", device_path},
               {"trials", trials},
               {"evals_per_trial", evals_per_trial},
               {"uniformity_n", uniformity_n},
               {"masking", masking},
               {"clock_randomization", clkrnd}});
  pufobf::Device d = load_or_default(device_path, global.seed,
                                     pufobf::Countermeasures{clkrnd, masking});
  pufobf::Rng rng = pufobf::make_rng(global.seed);
  pufobf::Device enrolled = pufobf::enroll(std::move(d), trials, evals_per_trial, uniformity_n, rng);
  fs::path path = out_path(global, "device.json");
  pufobf::save_device(path.string(), enrolled);
  std::printf("enrolled device: uniformity=%.4f unstable_challenge=%s file=%s\n",
              enrolled.enrollment->measured_uniformity,
              enrolled.enrollment->unstable_challenge.to_hex().c_str(), path.string().c_str());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Keyed NLFSR challenge obfuscation sandbox for strong PUFs"};
  app.require_subcommand(1);
  app.fallthrough();

  ConfigRegistry reg;
  GlobalOptions global;
  app.add_option("--config", global.config_path,
                 "JSON config file merged over built-in defaults")
      ->envname("PUFOBF_CONFIG");
  add_opt(&app, reg, "seed", global.seed, "Base seed for every randomized step");
  add_opt(&app, reg, "out", global.out_dir, "Output directory (default: current directory)");
  add_opt(&app, reg, "threads", global.threads,
          "Reserved worker count; current subcommands run single-threaded");

  auto* search = app.add_subcommand("search-specs",
                                    "Search for a maximum-length register and verify its period");
  std::string kind = "nlfsr";
  unsigned width = 27;
  uint64_t trials = 1000000;
  add_opt(search, reg, "kind", kind, "Register kind: nlfsr, lfsr or casr");
  add_opt(search, reg, "width", width, "Register width in stages");
  add_opt(search, reg, "trials", trials, "Candidate budget before giving up");
  search->callback([&] { cmd_search_specs(global, kind, width, trials); });

  auto* avalanche = app.add_subcommand(
      "avalanche", "Estimate output flip probabilities under single-bit challenge toggles");
  unsigned av_n = 10000;
  unsigned av_warmup = 112;
  unsigned av_flush = 56;
  std::string av_control = "nlfsr";
  std::string av_toggles;
  std::string av_device;
  add_opt(avalanche, reg, "n", av_n, "Challenge pairs per toggled bit");
  add_opt(avalanche, reg, "warmup", av_warmup, "Warm-up cycles before the first output");
  add_opt(avalanche, reg, "flush", av_flush, "Flush cycles per output");
  add_opt(avalanche, reg, "control", av_control,
          "Obfuscator under test: nlfsr, lfsr (linear control) or both");
  add_opt(avalanche, reg, "toggles", av_toggles,
          "Comma-separated challenge bits to toggle (default: all)");
  add_opt(avalanche, reg, "device", av_device,
          "Device-state file supplying the register pair (default: shipped parameters)");
  avalanche->callback(
      [&] { cmd_avalanche(global, av_n, av_warmup, av_flush, av_control, av_toggles, av_device); });

  auto* sca = app.add_subcommand(
      "sca", "Correlation power analysis across a countermeasure matrix");
  ScaOptions sca_o;
  add_opt(sca, reg, "countermeasures", sca_o.cells,
          "Comma-separated cells: none, clkrnd, masked, masked+clkrnd, or all");
  add_opt(sca, reg, "device", sca_o.device,
          "Device-state file for the victim (default: derived from seed)");
  add_opt(sca, reg, "traces", sca_o.traces, "Traces to collect per cell");
  add_opt(sca, reg, "noise-sigma", sca_o.noise_sigma, "Gaussian noise sigma per sample");
  add_opt(sca, reg, "samples-per-cycle", sca_o.samples_per_cycle, "Samples recorded per cycle");
  add_opt(sca, reg, "model", sca_o.model, "Leak model: hamming_distance or hamming_weight");
  add_opt(sca, reg, "align", sca_o.align,
          "Trace alignment: reference_clock or enabled_cycles_only");
  add_opt(sca, reg, "target", sca_o.target, "Attack window: load_cycle or full_trace");
  add_opt(sca, reg, "chunk-bits", sca_o.chunk_bits, "Key chunk size in bits");
  add_opt(sca, reg, "save-traces", sca_o.save_traces, "Also write the raw trace sets");
  sca->callback([&] { cmd_sca(global, sca_o); });

  auto* crps = app.add_subcommand("crps", "Collect a challenge-response dataset");
  std::string crps_device;
  unsigned crps_n = 100000;
  std::string crps_mode = "obfuscated";
  add_opt(crps, reg, "device", crps_device,
          "Device-state file to query (default: derived from seed)");
  add_opt(crps, reg, "n", crps_n, "Number of unique challenges");
  add_opt(crps, reg, "mode", crps_mode, "raw (bypass obfuscation) or obfuscated");
  crps->callback([&] { cmd_crps(global, crps_device, crps_n, crps_mode); });

  auto* ml = app.add_subcommand("ml", "Train a modeling attack on a CRP dataset");
  MlOptions ml_o;
  add_opt(ml, reg, "crps", ml_o.crps, "CRP CSV path (default: <out>/crps.csv)");
  add_opt(ml, reg, "hidden", ml_o.hidden, "Comma-separated hidden layer widths");
  add_opt(ml, reg, "epochs", ml_o.epochs, "Training epochs");
  add_opt(ml, reg, "learning-rate", ml_o.learning_rate, "SGD learning rate");
  add_opt(ml, reg, "momentum", ml_o.momentum, "SGD momentum");
  add_opt(ml, reg, "batch-size", ml_o.batch_size, "Minibatch size");
  add_opt(ml, reg, "test-fraction", ml_o.test_fraction, "Held-out fraction for test accuracy");
  ml->callback([&] { cmd_ml(global, ml_o); });

  auto* eval = app.add_subcommand("eval", "Evaluate a device on one external challenge");
  std::string eval_device;
  std::string eval_challenge;
  unsigned eval_bits = 1;
  std::string eval_format = "bits";
  add_opt(eval, reg, "device", eval_device,
          "Device-state file to evaluate (default: derived from seed)");
  add_opt(eval, reg, "challenge", eval_challenge, "External challenge as hex");
  add_opt(eval, reg, "bits", eval_bits, "Response bits to produce");
  add_opt(eval, reg, "format", eval_format, "Output format: bits or hex");
  eval->callback([&] { cmd_eval(global, eval_device, eval_challenge, eval_bits, eval_format); });

  auto* enroll = app.add_subcommand("enroll", "Characterize a device and write its state file");
  std::string enroll_device;
  unsigned enroll_trials = 500;
  unsigned enroll_evals = 11;
  unsigned enroll_uniformity_n = 10000;
  bool enroll_masking = false;
  bool enroll_clkrnd = false;
  add_opt(enroll, reg, "device", enroll_device,
          "Existing device-state file to re-enroll (default: derive a new device from seed)");
  add_opt(enroll, reg, "trials", enroll_trials, "Challenges screened for instability");
  add_opt(enroll, reg, "evals-per-trial", enroll_evals, "Repeated evaluations per screened challenge");
  add_opt(enroll, reg, "uniformity-n", enroll_uniformity_n, "Challenges for the uniformity estimate");
  add_opt(enroll, reg, "masking", enroll_masking, "Derive the new device with masking enabled");
  add_opt(enroll, reg, "clock-randomization", enroll_clkrnd,
          "Derive the new device with clock randomization enabled");
  enroll->callback([&] {
    cmd_enroll(global, enroll_device, enroll_trials, enroll_evals, enroll_uniformity_n,
               enroll_masking, enroll_clkrnd);
  });

  try {
    // The config file seeds the defaults; environment variables and flags
    // then override during parse.
    std::string config_path;
    if (const char* env = std::getenv("PUFOBF_CONFIG")) config_path = env;
    for (int i = 1; i < argc; ++i) {
      std::string arg = argv[i];
      if (arg == "--config" && i + 1 < argc) {
        config_path = argv[i + 1];
      } else if (arg.rfind("--config=", 0) == 0) {
        config_path = arg.substr(9);
      }
    }
    if (!config_path.empty()) {
      reg.apply(pufobf::read_json_file(config_path), config_path);
    }
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  } catch (const ExitWith& e) {
    if (e.what()[0] != '\0') std::fprintf(stderr, "error: %s\n", e.what());
    return e.code;
  } catch (const pufobf::IoError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  } catch (const pufobf::TrialsExhausted& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const pufobf::SeedRejected& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const pufobf::NotFound& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const std::filesystem::filesystem_error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  } catch (const pufobf::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const json::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
