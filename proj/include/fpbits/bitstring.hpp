// Copyright 2026 The fpbits Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <bit>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "fpbits/error.hpp"

namespace fpbits {

/// Fixed-length ordered bit-string with a cached popcount.
class BitString {
 public:
  BitString() = default;
  explicit BitString(std::size_t size) : size_(size), words_((size + 63) / 64, 0) {}

  std::size_t size() const { return size_; }
  std::size_t ones() const { return ones_; }

  bool test(std::size_t i) const { return (words_[i / 64] >> (i % 64)) & 1u; }

  void set(std::size_t i) {
    std::uint64_t& w = words_[i / 64];
    const std::uint64_t bit = std::uint64_t{1} << (i % 64);
    if (!(w & bit)) {
      w |= bit;
      ++ones_;
    }
  }

  void reset(std::size_t i) {
    std::uint64_t& w = words_[i / 64];
    const std::uint64_t bit = std::uint64_t{1} << (i % 64);
    if (w & bit) {
      w &= ~bit;
      --ones_;
    }
  }

  std::span<const std::uint64_t> words() const { return words_; }

  friend BitString operator&(const BitString& a, const BitString& b) {
    require_same_length(a.size(), b.size(), "BitString AND");
    BitString out(a.size());
    for (std::size_t i = 0; i < out.words_.size(); ++i) out.words_[i] = a.words_[i] & b.words_[i];
    out.recount();
    return out;
  }

  friend BitString operator|(const BitString& a, const BitString& b) {
    require_same_length(a.size(), b.size(), "BitString OR");
    BitString out(a.size());
    for (std::size_t i = 0; i < out.words_.size(); ++i) out.words_[i] = a.words_[i] | b.words_[i];
    out.recount();
    return out;
  }

  friend bool operator==(const BitString& a, const BitString& b) {
    return a.size_ == b.size_ && a.words_ == b.words_;
  }

  /// Packed little-endian bitmap: bit i lives in byte i/8 at position i%8.
  std::vector<std::uint8_t> to_bytes() const {
    std::vector<std::uint8_t> out((size_ + 7) / 8, 0);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = static_cast<std::uint8_t>(words_[i / 8] >> (8 * (i % 8)));
    return out;
  }

  static BitString from_bytes(std::span<const std::uint8_t> bytes, std::size_t size) {
    if (bytes.size() != (size + 7) / 8) throw Error(ErrorCode::BadLength, "packed bitmap has wrong byte count");
    BitString out(size);
    for (std::size_t i = 0; i < bytes.size(); ++i) {
      out.words_[i / 8] |= static_cast<std::uint64_t>(bytes[i]) << (8 * (i % 8));
    }
    if (size % 64 != 0 && !out.words_.empty()) out.words_.back() &= (std::uint64_t{1} << (size % 64)) - 1;
    out.recount();
    return out;
  }

  std::string to_string() const {
    std::string s(size_, '0');
    for (std::size_t i = 0; i < size_; ++i) {
      if (test(i)) s[i] = '1';
    }
    return s;
  }

 private:
  void recount() {
    ones_ = 0;
    for (std::uint64_t w : words_) ones_ += static_cast<std::size_t>(std::popcount(w));
  }

  std::size_t size_ = 0;
  std::size_t ones_ = 0;
  std::vector<std::uint64_t> words_;
};

inline std::size_t common_ones(const BitString& a, const BitString& b) {
  require_same_length(a.size(), b.size(), "common_ones");
  std::size_t n = 0;
  for (std::size_t i = 0; i < a.words().size(); ++i) n += static_cast<std::size_t>(std::popcount(a.words()[i] & b.words()[i]));
  return n;
}

}  // namespace fpbits
