// Copyright 2026 The dpsoa Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <bit>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace dpsoa {

// Fixed-length bit vector indexed by domain point. Bit i of word i/64 is the
// label of point i.
class BitVec {
 public:
  BitVec() = default;
  explicit BitVec(uint32_t nbits)
      : nbits_(nbits), words_((nbits + 63) / 64, 0) {}

  uint32_t size() const { return nbits_; }

  bool get(uint32_t i) const { return (words_[i >> 6] >> (i & 63)) & 1u; }

  void set(uint32_t i, bool v) {
    uint64_t mask = uint64_t{1} << (i & 63);
    if (v)
      words_[i >> 6] |= mask;
    else
      words_[i >> 6] &= ~mask;
  }

  friend bool operator==(const BitVec& a, const BitVec& b) {
    return a.nbits_ == b.nbits_ && a.words_ == b.words_;
  }
  friend bool operator!=(const BitVec& a, const BitVec& b) { return !(a == b); }

  // Lexicographic order on the label string, point 0 first.
  friend bool lex_less(const BitVec& a, const BitVec& b) {
    for (size_t w = 0; w < a.words_.size() && w < b.words_.size(); ++w) {
      uint64_t diff = a.words_[w] ^ b.words_[w];
      if (diff != 0) {
        int bit = std::countr_zero(diff);
        return ((a.words_[w] >> bit) & 1u) == 0;
      }
    }
    return a.nbits_ < b.nbits_;
  }

  // Smallest point where the two vectors disagree, or -1 if equal.
  friend int first_disagreement(const BitVec& a, const BitVec& b) {
    for (size_t w = 0; w < a.words_.size(); ++w) {
      uint64_t diff = a.words_[w] ^ b.words_[w];
      if (w + 1 == a.words_.size() && (a.nbits_ & 63) != 0)
        diff &= (uint64_t{1} << (a.nbits_ & 63)) - 1;
      if (diff != 0) return int(w * 64 + std::countr_zero(diff));
    }
    return -1;
  }

  std::string to_string() const {
    std::string s(nbits_, '0');
    for (uint32_t i = 0; i < nbits_; ++i)
      if (get(i)) s[i] = '1';
    return s;
  }

  size_t hash() const {
    uint64_t h = 0x9e3779b97f4a7c15ull ^ nbits_;
    for (uint64_t w : words_) {
      h ^= w + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
    }
    return size_t(h);
  }

 private:
  uint32_t nbits_ = 0;
  std::vector<uint64_t> words_;
};

// A published predictor: either a full label vector over the domain, or the
// bottom sentinel (empty optional).
using Predictor = std::optional<BitVec>;

// Total order with bottom first, then lexicographic; used for deterministic
// map iteration and tie-breaking.
struct PredictorLess {
  bool operator()(const Predictor& a, const Predictor& b) const {
    if (!a.has_value()) return b.has_value();
    if (!b.has_value()) return false;
    return lex_less(*a, *b);
  }
};

inline std::string predictor_to_string(const Predictor& p) {
  return p.has_value() ? p->to_string() : std::string("bottom");
}

}  // namespace dpsoa
