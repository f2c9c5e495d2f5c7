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

#include "dpsoa/hypothesis.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "dpsoa/rng.hpp"

namespace dpsoa {

struct HypothesisClass::Memo {
  struct SubsetHash {
    size_t operator()(const std::vector<uint32_t>& v) const {
      uint64_t h = 0xcbf29ce484222325ull;
      for (uint32_t i : v) {
        h ^= i;
        h *= 0x100000001b3ull;
      }
      return size_t(h);
    }
  };
  std::mutex mu;
  std::unordered_map<std::vector<uint32_t>, int, SubsetHash> table;
};

HypothesisClass::HypothesisClass(uint32_t domain_size,
                                 std::vector<BitVec> hypotheses)
    : domain_size_(domain_size),
      hyps_(std::move(hypotheses)),
      memo_(std::make_unique<Memo>()) {
  for (const BitVec& h : hyps_) {
    if (h.size() != domain_size_)
      throw std::invalid_argument("hypothesis length != domain size");
  }
  std::sort(hyps_.begin(), hyps_.end(),
            [](const BitVec& a, const BitVec& b) { return lex_less(a, b); });
  hyps_.erase(std::unique(hyps_.begin(), hyps_.end()), hyps_.end());
}

HypothesisClass::HypothesisClass(const HypothesisClass& other)
    : domain_size_(other.domain_size_),
      hyps_(other.hyps_),
      memo_(std::make_unique<Memo>()) {
  std::lock_guard<std::mutex> lock(other.memo_->mu);
  memo_->table = other.memo_->table;
}

HypothesisClass& HypothesisClass::operator=(const HypothesisClass& other) {
  if (this != &other) {
    HypothesisClass copy(other);
    *this = std::move(copy);
  }
  return *this;
}

HypothesisClass::HypothesisClass(HypothesisClass&&) noexcept = default;
HypothesisClass& HypothesisClass::operator=(HypothesisClass&&) noexcept =
    default;
HypothesisClass::~HypothesisClass() = default;

HypothesisClass HypothesisClass::thresholds(uint32_t n) {
  std::vector<BitVec> hs;
  for (uint32_t j = 0; j <= n; ++j) {
    BitVec h(n);
    for (uint32_t x = j; x < n; ++x) h.set(x, true);
    hs.push_back(h);
  }
  return HypothesisClass(n, std::move(hs));
}

HypothesisClass HypothesisClass::points(uint32_t n) {
  std::vector<BitVec> hs;
  hs.emplace_back(n);  // all-zeros
  for (uint32_t i = 0; i < n; ++i) {
    BitVec h(n);
    h.set(i, true);
    hs.push_back(h);
  }
  return HypothesisClass(n, std::move(hs));
}

HypothesisClass HypothesisClass::intervals(uint32_t n) {
  std::vector<BitVec> hs;
  hs.emplace_back(n);  // empty interval
  for (uint32_t a = 0; a < n; ++a) {
    for (uint32_t b = a; b < n; ++b) {
      BitVec h(n);
      for (uint32_t x = a; x <= b; ++x) h.set(x, true);
      hs.push_back(h);
    }
  }
  return HypothesisClass(n, std::move(hs));
}

HypothesisClass HypothesisClass::full(uint32_t n) {
  if (n > 20) throw std::invalid_argument("full:n limited to n <= 20");
  std::vector<BitVec> hs;
  hs.reserve(size_t{1} << n);
  for (uint64_t m = 0; m < (uint64_t{1} << n); ++m) {
    BitVec h(n);
    for (uint32_t x = 0; x < n; ++x) h.set(x, (m >> x) & 1);
    hs.push_back(h);
  }
  return HypothesisClass(n, std::move(hs));
}

HypothesisClass HypothesisClass::random(uint32_t n, uint32_t m, uint64_t seed) {
  Rng rng(seed, /*stream=*/0xc1a55);
  std::vector<BitVec> hs;
  for (uint32_t i = 0; i < m; ++i) {
    BitVec h(n);
    for (uint32_t x = 0; x < n; ++x) h.set(x, rng.bit());
    hs.push_back(h);
  }
  return HypothesisClass(n, std::move(hs));  // constructor dedups
}

HypothesisClass HypothesisClass::parse(std::istream& in) {
  uint32_t n = 0, m = 0;
  if (!(in >> n >> m)) throw std::invalid_argument("bad class file header");
  std::vector<BitVec> hs;
  hs.reserve(m);
  for (uint32_t i = 0; i < m; ++i) {
    std::string row;
    if (!(in >> row) || row.size() != n)
      throw std::invalid_argument("bad class file row");
    BitVec h(n);
    for (uint32_t x = 0; x < n; ++x) {
      if (row[x] == '1')
        h.set(x, true);
      else if (row[x] != '0')
        throw std::invalid_argument("class file rows must be over {0,1}");
    }
    hs.push_back(h);
  }
  return HypothesisClass(n, std::move(hs));
}

HypothesisClass HypothesisClass::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open class file: " + path);
  return parse(in);
}

HypothesisClass HypothesisClass::from_spec(const std::string& spec) {
  auto colon = spec.find(':');
  if (colon != std::string::npos) {
    std::string name = spec.substr(0, colon);
    std::string rest = spec.substr(colon + 1);
    auto parse_u = [](const std::string& s) {
      size_t pos = 0;
      unsigned long long v = std::stoull(s, &pos);
      if (pos != s.size()) throw std::invalid_argument("bad class spec number");
      return v;
    };
    if (name == "thresholds") return thresholds(uint32_t(parse_u(rest)));
    if (name == "points") return points(uint32_t(parse_u(rest)));
    if (name == "intervals") return intervals(uint32_t(parse_u(rest)));
    if (name == "full") return full(uint32_t(parse_u(rest)));
    if (name == "random") {
      auto c1 = rest.find(':');
      auto c2 = rest.find(':', c1 == std::string::npos ? 0 : c1 + 1);
      if (c1 == std::string::npos || c2 == std::string::npos)
        throw std::invalid_argument("random class spec is random:n:m:seed");
      uint32_t n = uint32_t(parse_u(rest.substr(0, c1)));
      uint32_t m = uint32_t(parse_u(rest.substr(c1 + 1, c2 - c1 - 1)));
      uint64_t seed = parse_u(rest.substr(c2 + 1));
      return random(n, m, seed);
    }
  }
  return from_file(spec);
}

void HypothesisClass::write(std::ostream& out) const {
  out << domain_size_ << ' ' << hyps_.size() << '\n';
  for (const BitVec& h : hyps_) out << h.to_string() << '\n';
}

void HypothesisClass::check_point(uint32_t x) const {
  if (x >= domain_size_)
    throw std::out_of_range("domain point out of range");
}

int HypothesisClass::ldim() const {
  if (hyps_.empty()) throw std::runtime_error("empty hypothesis class");
  std::vector<uint32_t> all(hyps_.size());
  for (uint32_t i = 0; i < all.size(); ++i) all[i] = i;
  return ldim_rec(all);
}

int HypothesisClass::ldim_subset(const std::vector<uint32_t>& subset) const {
  if (subset.empty()) return -1;
  std::vector<uint32_t> s = subset;
  return ldim_rec(s);
}

int HypothesisClass::ldim_rec(std::vector<uint32_t>& subset) const {
  if (subset.empty()) return -1;
  if (subset.size() == 1) return 0;
  {
    std::lock_guard<std::mutex> lock(memo_->mu);
    auto it = memo_->table.find(subset);
    if (it != memo_->table.end()) return it->second;
  }
  int best = 0;
  std::vector<uint32_t> side0, side1;
  for (uint32_t x = 0; x < domain_size_; ++x) {
    side0.clear();
    side1.clear();
    for (uint32_t i : subset) {
      (hyps_[i].get(x) ? side1 : side0).push_back(i);
    }
    if (side0.empty() || side1.empty()) continue;
    int d0 = ldim_rec(side0);
    int d1 = ldim_rec(side1);
    best = std::max(best, 1 + std::min(d0, d1));
  }
  {
    std::lock_guard<std::mutex> lock(memo_->mu);
    memo_->table.emplace(subset, best);
  }
  return best;
}

HypothesisClass HypothesisClass::restrict_to(uint32_t x, bool y) const {
  check_point(x);
  std::vector<BitVec> kept;
  for (const BitVec& h : hyps_)
    if (h.get(x) == y) kept.push_back(h);
  return HypothesisClass(domain_size_, std::move(kept));
}

int ldim(const HypothesisClass& cls) { return cls.ldim(); }

HypothesisClass restrict_class(const HypothesisClass& cls, uint32_t x, bool y) {
  return cls.restrict_to(x, y);
}

SoaState::SoaState(const HypothesisClass& cls) : cls_(&cls) {
  if (cls.empty()) throw std::runtime_error("empty hypothesis class");
  version_.resize(cls.size());
  for (uint32_t i = 0; i < version_.size(); ++i) version_[i] = i;
}

bool SoaState::predict(uint32_t x) const {
  if (x >= cls_->domain_size())
    throw std::out_of_range("domain point out of range");
  std::vector<uint32_t> side0, side1;
  for (uint32_t i : version_)
    (cls_->hypothesis(i).get(x) ? side1 : side0).push_back(i);
  int d0 = cls_->ldim_subset(side0);
  int d1 = cls_->ldim_subset(side1);
  return d1 >= d0;  // ties toward 1
}

bool SoaState::step(const LabeledExample& ex, bool total) {
  if (ex.x >= cls_->domain_size())
    throw std::out_of_range("domain point out of range");
  bool predicted = predict(ex.x);
  ++history_len_;
  if (frozen_) {
    return predicted != ex.y;
  }
  std::vector<uint32_t> kept;
  for (uint32_t i : version_)
    if (cls_->hypothesis(i).get(ex.x) == ex.y) kept.push_back(i);
  if (kept.empty()) {
    if (!total) throw std::runtime_error("inconsistent example");
    frozen_ = true;  // predictor stays at the last nonempty version space
  } else {
    version_ = std::move(kept);
  }
  return predicted != ex.y;
}

void SoaState::update(const LabeledExample& ex) {
  if (step(ex, /*total=*/false)) ++mistake_count_;
}

void SoaState::absorb(const LabeledExample& ex) {
  if (step(ex, /*total=*/true)) ++mistake_count_;
}

BitVec SoaState::fingerprint() const {
  BitVec fp(cls_->domain_size());
  for (uint32_t x = 0; x < cls_->domain_size(); ++x) fp.set(x, predict(x));
  return fp;
}

Predictor run_on_sequence(const HypothesisClass& cls, const Sample& seq) {
  if (!seq.has_value()) return std::nullopt;  // A(bottom) = bottom
  SoaState s(cls);
  for (const LabeledExample& ex : *seq) s.update(ex);
  return s.fingerprint();
}

TotalRunResult run_total(const HypothesisClass& cls, const Sample& seq) {
  TotalRunResult r;
  if (!seq.has_value()) return r;  // bottom predictor
  SoaState s(cls);
  for (const LabeledExample& ex : *seq) s.absorb(ex);
  r.predictor = s.fingerprint();
  r.mistakes = uint32_t(s.mistake_count());
  r.frozen = s.frozen();
  return r;
}

bool is_realizable(const HypothesisClass& cls,
                   const std::vector<LabeledExample>& seq) {
  std::vector<uint32_t> alive(cls.size());
  for (uint32_t i = 0; i < alive.size(); ++i) alive[i] = i;
  for (const LabeledExample& ex : seq) {
    std::vector<uint32_t> kept;
    for (uint32_t i : alive)
      if (cls.hypothesis(i).get(ex.x) == ex.y) kept.push_back(i);
    if (kept.empty()) return false;
    alive = std::move(kept);
  }
  return true;
}

}  // namespace dpsoa
