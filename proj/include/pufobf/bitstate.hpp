// Copyright pufobf contributors.
// Licensed under the Apache License, Version 2.0, see LICENSE for details.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <bit>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace pufobf {

// Fixed-width register value, 1..64 bits, stage 0 = least significant bit.
// Immutable width; bits above the width are always zero.
class BitState {
 public:
  BitState() = default;  // width 1, value 0

  BitState(unsigned width, uint64_t bits) : width_(width), bits_(bits) {
    if (width < 1 || width > 64) {
      throw std::invalid_argument("BitState: width must be in [1, 64]");
    }
    if ((bits & ~mask_for(width)) != 0) {
      throw std::invalid_argument("BitState: value wider than register");
    }
  }

  static BitState zero(unsigned width) { return BitState(width, 0); }

  static BitState all_ones(unsigned width) {
    return BitState(width, mask_for(width));
  }

  unsigned width() const { return width_; }
  uint64_t bits() const { return bits_; }
  uint64_t mask() const { return mask_for(width_); }

  bool bit(unsigned i) const {
    if (i >= width_) throw std::out_of_range("BitState: stage index out of range");
    return (bits_ >> i) & 1u;
  }

  BitState with_bit(unsigned i, bool v) const {
    if (i >= width_) throw std::out_of_range("BitState: stage index out of range");
    uint64_t b = v ? (bits_ | (uint64_t{1} << i)) : (bits_ & ~(uint64_t{1} << i));
    return BitState(width_, b);
  }

  BitState operator^(const BitState& o) const {
    if (o.width_ != width_) throw std::invalid_argument("BitState: width mismatch in xor");
    return BitState(width_, bits_ ^ o.bits_);
  }

  int popcount() const { return std::popcount(bits_); }

  bool operator==(const BitState&) const = default;

  // Lowercase hex, fixed length of ceil(width/4) digits, no prefix.
  std::string to_hex() const {
    unsigned digits = (width_ + 3) / 4;
    std::string out(digits, '0');
    static const char* kHex = "0123456789abcdef";
    uint64_t v = bits_;
    for (unsigned i = 0; i < digits; ++i) {
      out[digits - 1 - i] = kHex[v & 0xF];
      v >>= 4;
    }
    return out;
  }

  // Accepts an optional 0x prefix; value must fit the width.
  static BitState from_hex(unsigned width, std::string_view s) {
    if (s.substr(0, 2) == "0x" || s.substr(0, 2) == "0X") s.remove_prefix(2);
    if (s.empty() || s.size() > 16) {
      throw std::invalid_argument("BitState: bad hex literal");
    }
    uint64_t v = 0;
    for (char c : s) {
      int d;
      if (c >= '0' && c <= '9') d = c - '0';
      else if (c >= 'a' && c <= 'f') d = c - 'a' + 10;
      else if (c >= 'A' && c <= 'F') d = c - 'A' + 10;
      else throw std::invalid_argument("BitState: bad hex digit");
      v = (v << 4) | static_cast<uint64_t>(d);
    }
    return BitState(width, v);
  }

  static constexpr uint64_t mask_for(unsigned width) {
    return width >= 64 ? ~uint64_t{0} : ((uint64_t{1} << width) - 1);
  }

 private:
  unsigned width_ = 1;
  uint64_t bits_ = 0;
};

}  // namespace pufobf
