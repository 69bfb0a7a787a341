// Copyright pufobf contributors.
// Licensed under the Apache License, Version 2.0, see LICENSE for details.
// SPDX-License-Identifier: Apache-2.0
#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "pufobf/io.hpp"
#include "pufobf/rng.hpp"

namespace fs = std::filesystem;
using namespace pufobf;

namespace {

struct RunResult {
  int exit_code = -1;
  std::string out;
  std::string err;
};

// Spawns the CLI with stdout/stderr captured in scratch files. Quoting is
// not needed: every argument these tests pass is shell-safe.
RunResult run_cli(const std::string& args) {
  static int counter = 0;
  fs::path dir = fs::temp_directory_path();
  fs::path out = dir / ("pufobf_cli_out_" + std::to_string(++counter));
  fs::path err = dir / ("pufobf_cli_err_" + std::to_string(counter));
  std::string cmd = std::string(PUFOBF_CLI_PATH) + " " + args + " > " + out.string() + " 2> " +
                    err.string();
  int status = std::system(cmd.c_str());
  RunResult res;
  res.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  auto slurp = [](const fs::path& p) {
    std::ifstream in(p);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
  };
  res.out = slurp(out);
  res.err = slurp(err);
  fs::remove(out);
  fs::remove(err);
  return res;
}

std::string slurp_file(const fs::path& p) {
  std::ifstream in(p);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Scratch directory wiped on scope exit.
struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
  std::string str() const { return path.string(); }
};

}  // namespace

TEST_CASE("search-specs finds and verifies a tiny register deterministically") {
  TempDir dir("pufobf_cli_search");
  RunResult r1 = run_cli("search-specs --width 7 --seed 42 --out " + dir.str() + "/a");
  REQUIRE(r1.exit_code == 0);
  CHECK(r1.err.find("\"subcommand\":\"search-specs\"") != std::string::npos);

  json j = read_json_file(dir.path / "a" / "spec_nlfsr_w7.json");
  CHECK(j.at("period").get<uint64_t>() == 127);
  CHECK(j.at("spec").at("width").get<unsigned>() == 7);

  RunResult r2 = run_cli("search-specs --width 7 --seed 42 --out " + dir.str() + "/b");
  REQUIRE(r2.exit_code == 0);
  CHECK(slurp_file(dir.path / "a" / "spec_nlfsr_w7.json") ==
        slurp_file(dir.path / "b" / "spec_nlfsr_w7.json"));
}

TEST_CASE("search-specs exits nonzero when the candidate budget is exhausted") {
  TempDir dir("pufobf_cli_exhaust");
  // One candidate at this seed is not maximum-length; the search must give up.
  RunResult r = run_cli("search-specs --width 20 --trials 1 --seed 1 --out " + dir.str());
  CHECK(r.exit_code == 1);
  CHECK(r.err.find("error:") != std::string::npos);
}

TEST_CASE("eval is reproducible on a noiseless device and warns on the zero state") {
  TempDir dir("pufobf_cli_eval");
  Rng rng = make_rng(0xE7A1);
  BitState key = random_state(56, rng);
  Device d = Device::make(KeyStore::plain_otp(key), default_spec_a(), default_spec_b(),
                          Coupling::DroppedBit, default_prng_lfsr(), default_prng_casr(),
                          default_prng_taps(), 0, 0xFEED, 1.0, 0.0, 1, Countermeasures{});
  fs::path dev = dir.path / "device.json";
  save_device(dev.string(), d);

  std::string base = "eval --device " + dev.string() + " --challenge 0102030405aabb --bits 16";
  RunResult r1 = run_cli(base + " --seed 3");
  RunResult r2 = run_cli(base + " --seed 9");
  REQUIRE(r1.exit_code == 0);
  REQUIRE(r2.exit_code == 0);
  CHECK(r1.out == r2.out);
  CHECK(r1.out.size() == 17);  // 16 bits + newline
  CHECK(r1.err.find("zero-state") == std::string::npos);

  RunResult hex = run_cli(base + " --seed 3 --format hex");
  REQUIRE(hex.exit_code == 0);
  CHECK(hex.out.size() == 5);  // 4 hex digits + newline

  RunResult zero = run_cli("eval --device " + dev.string() + " --challenge " + key.to_hex());
  REQUIRE(zero.exit_code == 0);
  CHECK(zero.err.find("zero-state obfuscation") != std::string::npos);
}

TEST_CASE("enroll writes a loadable device whose masked evaluation works") {
  TempDir dir("pufobf_cli_enroll");
  RunResult r = run_cli("enroll --seed 21 --masking true --clock-randomization true "
                        "--uniformity-n 2000 --trials 100 --out " +
                        dir.str());
  REQUIRE(r.exit_code == 0);
  Device d = load_device((dir.path / "device.json").string());
  CHECK(d.cm.masking);
  CHECK(d.cm.clock_randomization);
  REQUIRE(d.enrollment.has_value());

  RunResult e = run_cli("eval --device " + (dir.path / "device.json").string() +
                        " --challenge 00000000000001 --bits 4 --seed 2");
  REQUIRE(e.exit_code == 0);
  CHECK(e.out.size() == 5);
}

TEST_CASE("crps then ml runs end to end on files") {
  TempDir dir("pufobf_cli_ml");
  RunResult c = run_cli("crps --n 1500 --mode raw --seed 11 --out " + dir.str());
  REQUIRE(c.exit_code == 0);
  std::string csv = slurp_file(dir.path / "crps.csv");
  CHECK(csv.rfind("challenge_hex,response\n", 0) == 0);

  RunResult m = run_cli("ml --epochs 6 --hidden 24 --seed 11 --out " + dir.str());
  REQUIRE(m.exit_code == 0);
  json j = read_json_file(dir.path / "ml_result.json");
  CHECK(j.at("train_n").get<size_t>() == 1200);
  CHECK(j.at("test_n").get<size_t>() == 300);
  CHECK(j.at("test_accuracy").get<double>() > 0.5);
}

TEST_CASE("avalanche control runs expose the linear register and degenerate schedules") {
  TempDir dir("pufobf_cli_avalanche");
  RunResult lin = run_cli("avalanche --n 1000 --toggles 3,17 --control lfsr --seed 5 --out " +
                          dir.str() + "/lin");
  REQUIRE(lin.exit_code == 0);
  json j = read_json_file(dir.path / "lin" / "avalanche_lfsr.json");
  CHECK(j.at("flag").get<std::string>() == "FAIL-SAC");
  CHECK(j.at("min_entry").get<double>() == 0.0);
  CHECK(j.at("max_entry").get<double>() == 1.0);

  std::string csv = slurp_file(dir.path / "lin" / "avalanche_lfsr.csv");
  size_t rows = static_cast<size_t>(std::count(csv.begin(), csv.end(), '\n'));
  CHECK(rows == 2);  // one row per toggled bit

  RunResult degen = run_cli("avalanche --n 1000 --toggles 3 --warmup 0 --flush 1 --seed 5 --out " +
                            dir.str() + "/degen");
  CHECK(degen.exit_code == 1);
  CHECK(fs::exists(dir.path / "degen" / "avalanche_nlfsr.csv"));
}

TEST_CASE("sca on the unprotected cell recovers the planted key") {
  TempDir dir("pufobf_cli_sca");
  RunResult r = run_cli("sca --countermeasures none --traces 600 --noise-sigma 0 --seed 7 --out " +
                        dir.str());
  REQUIRE(r.exit_code == 0);
  json summary = read_json_file(dir.path / "sca_summary.json");
  REQUIRE(summary.size() == 1);
  CHECK(summary.at(0).at("cell").get<std::string>() == "none");
  CHECK(summary.at(0).at("full_recovery").get<bool>());
  CHECK(summary.at(0).at("mean_true_rank").get<double>() == 1.0);
  CHECK(fs::exists(dir.path / "sca_none.json"));
  std::string table = slurp_file(dir.path / "sca_summary.csv");
  CHECK(static_cast<size_t>(std::count(table.begin(), table.end(), '\n')) == 2);
}

TEST_CASE("config file, environment, and flags resolve in precedence order") {
  TempDir dir("pufobf_cli_config");
  std::ofstream(dir.path / "cfg.json") << R"({"n": 1200, "mode": "raw", "seed": 77})";
  std::string cfg = " --config " + (dir.path / "cfg.json").string();

  RunResult file_only = run_cli("crps --out " + dir.str() + "/a" + cfg);
  REQUIRE(file_only.exit_code == 0);
  CHECK(file_only.out.find("wrote 1200 raw crps") != std::string::npos);

  setenv("PUFOBF_N", "1300", 1);
  RunResult env_wins = run_cli("crps --out " + dir.str() + "/b" + cfg);
  RunResult flag_wins = run_cli("crps --n 1100 --out " + dir.str() + "/c" + cfg);
  unsetenv("PUFOBF_N");
  REQUIRE(env_wins.exit_code == 0);
  CHECK(env_wins.out.find("wrote 1300 raw crps") != std::string::npos);
  REQUIRE(flag_wins.exit_code == 0);
  CHECK(flag_wins.out.find("wrote 1100 raw crps") != std::string::npos);

  std::ofstream(dir.path / "bad.json") << R"({"frobnicate": 1})";
  RunResult unknown = run_cli("crps --config " + (dir.path / "bad.json").string());
  CHECK(unknown.exit_code == 2);
  CHECK(unknown.err.find("frobnicate") != std::string::npos);
}

TEST_CASE("cli exit codes separate config errors from io errors") {
  CHECK(run_cli("ml --crps /nonexistent/crps.csv").exit_code == 3);
  CHECK(run_cli("eval").exit_code == 2);
  CHECK(run_cli("eval --device /nonexistent/device.json --challenge 00").exit_code == 3);
  CHECK(run_cli("crps --mode sideways").exit_code == 2);
  CHECK(run_cli("sca --countermeasures tinfoil").exit_code == 2);
  CHECK(run_cli("avalanche --control parity").exit_code == 2);
  CHECK(run_cli("search-specs --kind rc4").exit_code == 2);
  CHECK(run_cli("no-such-subcommand").exit_code == 2);
  CHECK(run_cli("").exit_code == 2);
  CHECK(run_cli("--help").exit_code == 0);
}
