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

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "dpsoa/bitvec.hpp"

namespace dpsoa {

struct LabeledExample {
  uint32_t x = 0;
  bool y = false;

  friend bool operator==(const LabeledExample& a, const LabeledExample& b) {
    return a.x == b.x && a.y == b.y;
  }
};

// A sequence fed to the online learner, or the bottom sentinel. Appending to
// bottom yields bottom.
using Sample = std::optional<std::vector<LabeledExample>>;

inline const Sample kBottomSample = std::nullopt;

// An explicit finite hypothesis class: a set of distinct label vectors over a
// finite domain [0, n). Littlestone dimension is computed exactly by the
// standard max-min recursion and memoized on version-space identity, so
// repeated SOA predictions over shrinking version spaces stay cheap.
//
// Instances are immutable after construction apart from the memo table, which
// is guarded by a mutex; values are safe to share read-only across threads.
class HypothesisClass {
 public:
  HypothesisClass(uint32_t domain_size, std::vector<BitVec> hypotheses);
  HypothesisClass(const HypothesisClass& other);
  HypothesisClass& operator=(const HypothesisClass& other);
  HypothesisClass(HypothesisClass&&) noexcept;
  HypothesisClass& operator=(HypothesisClass&&) noexcept;
  ~HypothesisClass();

  // Named generators: thresholds:n, points:n, intervals:n, full:n,
  // random:n:m:seed. Anything else is read as a path to a class file
  // ("n m" header, then m rows of n characters in {0,1}).
  static HypothesisClass from_spec(const std::string& spec);
  static HypothesisClass from_file(const std::string& path);
  static HypothesisClass parse(std::istream& in);

  static HypothesisClass thresholds(uint32_t n);
  static HypothesisClass points(uint32_t n);
  static HypothesisClass intervals(uint32_t n);
  static HypothesisClass full(uint32_t n);
  static HypothesisClass random(uint32_t n, uint32_t m, uint64_t seed);

  uint32_t domain_size() const { return domain_size_; }
  size_t size() const { return hyps_.size(); }
  bool empty() const { return hyps_.empty(); }
  const BitVec& hypothesis(size_t i) const { return hyps_[i]; }
  const std::vector<BitVec>& hypotheses() const { return hyps_; }

  // Littlestone dimension of the whole class. Throws on an empty class.
  int ldim() const;

  // Littlestone dimension of a subset of hypotheses given by sorted indices;
  // -1 for the empty subset (internal convention so that empty branches
  // contribute no depth).
  int ldim_subset(const std::vector<uint32_t>& subset) const;

  // The subclass {h : h(x) = y}. May be empty; callers must handle.
  HypothesisClass restrict_to(uint32_t x, bool y) const;

  void write(std::ostream& out) const;

 private:
  void check_point(uint32_t x) const;
  int ldim_rec(std::vector<uint32_t>& subset) const;

  uint32_t domain_size_ = 0;
  std::vector<BitVec> hyps_;  // sorted lexicographically, no duplicates

  struct Memo;  // mutex-guarded subset table
  std::unique_ptr<Memo> memo_;
};

// Free-function spellings for the core operations.
int ldim(const HypothesisClass& cls);
HypothesisClass restrict_class(const HypothesisClass& cls, uint32_t x, bool y);

// State of the Standard Optimal Algorithm: a version space over a fixed base
// class. The version space only shrinks under update, and on realizable
// histories the mistake count is bounded by the Littlestone dimension of the
// initial class. After a mistake on x every surviving hypothesis agrees with
// the observed label at x, so the predictor fingerprint always changes.
class SoaState {
 public:
  explicit SoaState(const HypothesisClass& cls);

  const HypothesisClass& base() const { return *cls_; }
  const std::vector<uint32_t>& version_space() const { return version_; }
  size_t history_len() const { return history_len_; }
  size_t mistake_count() const { return mistake_count_; }
  bool frozen() const { return frozen_; }

  // Prediction: the label whose consistent restriction has the larger
  // Littlestone dimension, ties toward 1, empty restrictions scoring -1.
  bool predict(uint32_t x) const;

  // Strict update; throws std::runtime_error("inconsistent example") if the
  // example empties the version space.
  void update(const LabeledExample& ex);

  // Total update used when replaying merged samples: an inconsistent example
  // freezes the predictor at the last nonempty version space instead of
  // failing. Mistakes keep counting against the frozen predictor.
  void absorb(const LabeledExample& ex);

  // Full label vector of the current predictor over the domain.
  BitVec fingerprint() const;

 private:
  bool step(const LabeledExample& ex, bool total);

  const HypothesisClass* cls_;
  std::vector<uint32_t> version_;
  size_t history_len_ = 0;
  size_t mistake_count_ = 0;
  bool frozen_ = false;
};

inline bool soa_predict(const SoaState& s, uint32_t x) { return s.predict(x); }

inline SoaState soa_update(SoaState s, const LabeledExample& ex) {
  s.update(ex);
  return s;
}

// A(S): fold the SOA over the sequence and return the predictor fingerprint;
// A(bottom) = bottom. Deterministic in (cls, seq). Throws on an inconsistent
// sequence.
Predictor run_on_sequence(const HypothesisClass& cls, const Sample& seq);

struct TotalRunResult {
  Predictor predictor;
  uint32_t mistakes = 0;
  bool frozen = false;
};

// Total variant of A(S): inconsistent suffixes freeze the predictor rather
// than erroring. This is the black-box A used by the forest, where guessed
// labels can make merged samples non-realizable.
TotalRunResult run_total(const HypothesisClass& cls, const Sample& seq);

// True iff some hypothesis of cls is consistent with every example.
bool is_realizable(const HypothesisClass& cls,
                   const std::vector<LabeledExample>& seq);

}  // namespace dpsoa
