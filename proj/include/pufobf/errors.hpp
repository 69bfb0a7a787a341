// Copyright pufobf contributors.
// Licensed under the Apache License, Version 2.0, see LICENSE for details.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace pufobf {

// Base class for recoverable library errors. Contract violations (bad widths,
// out-of-range indices) throw std::invalid_argument / std::out_of_range instead.
struct Error : std::runtime_error {
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// A register/key/config combination does not match what an operation needs.
struct ConfigMismatch : Error {
  explicit ConfigMismatch(const std::string& msg) : Error(msg) {}
};

// An entropy draw left a register all-zero and the re-draw budget ran out.
struct SeedRejected : Error {
  explicit SeedRejected(const std::string& msg) : Error(msg) {}
};

// A randomized search hit its trial bound without a hit.
struct TrialsExhausted : Error {
  explicit TrialsExhausted(const std::string& msg) : Error(msg) {}
};

// A bounded scan found no element with the requested property.
struct NotFound : Error {
  explicit NotFound(const std::string& msg) : Error(msg) {}
};

// Trace width is not divisible into key-hypothesis chunks.
struct ChunkMismatch : Error {
  explicit ChunkMismatch(const std::string& msg) : Error(msg) {}
};

// Training loss became non-finite.
struct DivergedTraining : Error {
  explicit DivergedTraining(const std::string& msg) : Error(msg) {}
};

}  // namespace pufobf
