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

#include "dpsoa/adaptive.hpp"

#include <cmath>
#include <stdexcept>

namespace dpsoa {

CompositionParams composition_params(double epsilon, double delta, int64_t T) {
  if (!(epsilon > 0)) throw std::invalid_argument("epsilon must be positive");
  if (!(delta > 0 && delta < 1))
    throw std::invalid_argument("delta must be in (0,1)");
  if (T < 1) throw std::invalid_argument("T must be >= 1");
  CompositionParams out;
  out.delta_prime = delta / (2.0 * double(T));
  out.epsilon_prime =
      epsilon / (2.0 * std::sqrt(2.0 * double(T) * std::log(1.0 / delta)));
  return out;
}

namespace {

BitVec default_fingerprint(uint32_t n) { return BitVec(n); }  // constant 0

BitVec last_fingerprint(const std::vector<Predictor>& published, uint32_t n) {
  if (!published.empty() && published.back().has_value())
    return *published.back();
  return default_fingerprint(n);
}

class ObliviousAdversary final : public Adversary {
 public:
  explicit ObliviousAdversary(std::vector<LabeledExample> seq)
      : seq_(std::move(seq)) {}

  LabeledExample next_example(const std::vector<Predictor>&, Rng&) override {
    if (next_ >= seq_.size())
      throw std::runtime_error("oblivious sequence exhausted");
    return seq_[next_++];
  }

 private:
  std::vector<LabeledExample> seq_;
  size_t next_ = 0;
};

class FixedTargetAdversary final : public Adversary {
 public:
  FixedTargetAdversary(const HypothesisClass& cls, uint64_t seed) : cls_(&cls) {
    Rng pick(seed, /*stream=*/7);
    target_ = cls.hypothesis(size_t(pick.below(cls.size())));
  }

  LabeledExample next_example(const std::vector<Predictor>&,
                              Rng& rng) override {
    uint32_t x = uint32_t(rng.below(cls_->domain_size()));
    return LabeledExample{x, target_.get(x)};
  }

 private:
  const HypothesisClass* cls_;
  BitVec target_;
};

// Keeps its own consistency checker; every emission shrinks the surviving
// set to a nonempty subset, so prefixes stay realizable by construction.
class DisagreeAdversary final : public Adversary {
 public:
  explicit DisagreeAdversary(const HypothesisClass& cls) : cls_(&cls) {
    alive_.resize(cls.size());
    for (uint32_t i = 0; i < alive_.size(); ++i) alive_[i] = i;
  }

  LabeledExample next_example(const std::vector<Predictor>& published,
                              Rng& rng) override {
    uint32_t n = cls_->domain_size();
    BitVec fp = last_fingerprint(published, n);
    for (uint32_t x = 0; x < n; ++x) {
      bool contradiction = !fp.get(x);
      bool witness = false;
      for (uint32_t i : alive_) {
        if (cls_->hypothesis(i).get(x) == contradiction) {
          witness = true;
          break;
        }
      }
      if (witness) {
        shrink(x, contradiction);
        return LabeledExample{x, contradiction};
      }
    }
    // Fingerprint already matches every survivor; emit consistently.
    uint32_t x = uint32_t(rng.below(n));
    return LabeledExample{x, cls_->hypothesis(alive_[0]).get(x)};
  }

 private:
  void shrink(uint32_t x, bool y) {
    std::vector<uint32_t> kept;
    for (uint32_t i : alive_)
      if (cls_->hypothesis(i).get(x) == y) kept.push_back(i);
    alive_ = std::move(kept);
  }

  const HypothesisClass* cls_;
  std::vector<uint32_t> alive_;
};

class MistakeTreeAdversary final : public Adversary {
 public:
  MistakeTreeAdversary(const HypothesisClass& cls) : cls_(&cls) {
    alive_.resize(cls.size());
    for (uint32_t i = 0; i < alive_.size(); ++i) alive_[i] = i;
  }

  LabeledExample next_example(const std::vector<Predictor>& published,
                              Rng& rng) override {
    uint32_t n = cls_->domain_size();
    int d = cls_->ldim_subset(alive_);
    if (d >= 1) {
      // Smallest point achieving the max-min split keeps both branches alive.
      for (uint32_t x = 0; x < n; ++x) {
        std::vector<uint32_t> side0, side1;
        for (uint32_t i : alive_)
          (cls_->hypothesis(i).get(x) ? side1 : side0).push_back(i);
        if (side0.empty() || side1.empty()) continue;
        int d0 = cls_->ldim_subset(side0);
        int d1 = cls_->ldim_subset(side1);
        if (1 + std::min(d0, d1) == d) {
          BitVec fp = last_fingerprint(published, n);
          bool y = !fp.get(x);
          alive_ = fp.get(x) ? std::move(side0) : std::move(side1);
          return LabeledExample{x, y};
        }
      }
    }
    uint32_t x = uint32_t(rng.below(n));
    return LabeledExample{x, cls_->hypothesis(alive_[0]).get(x)};
  }

 private:
  const HypothesisClass* cls_;
  std::vector<uint32_t> alive_;
};

}  // namespace

std::unique_ptr<Adversary> make_oblivious_adversary(
    std::vector<LabeledExample> seq) {
  return std::make_unique<ObliviousAdversary>(std::move(seq));
}

std::unique_ptr<Adversary> build_adaptive_adversary(const std::string& name,
                                                    const HypothesisClass& cls,
                                                    uint64_t seed) {
  if (name == "fixed-target")
    return std::make_unique<FixedTargetAdversary>(cls, seed);
  if (name == "disagree") return std::make_unique<DisagreeAdversary>(cls);
  if (name == "mistake-tree")
    return std::make_unique<MistakeTreeAdversary>(cls);
  throw std::invalid_argument("unknown adversary: " + name);
}

std::vector<LabeledExample> realizable_stream(const HypothesisClass& cls,
                                              uint32_t T, uint64_t seed) {
  FixedTargetAdversary adv(cls, seed);
  Rng rng(seed, /*stream=*/8);
  std::vector<LabeledExample> seq;
  seq.reserve(T);
  std::vector<Predictor> none;
  for (uint32_t t = 0; t < T; ++t) seq.push_back(adv.next_example(none, rng));
  return seq;
}

RunRecord run_adaptive(const HypothesisClass& cls, Adversary& adversary,
                       const AdaptiveBudget& budget, uint32_t T, uint32_t k1,
                       uint32_t k2, double eta, uint64_t seed) {
  if (T < 1) throw std::invalid_argument("T must be >= 1");
  CompositionParams cp;
  if (budget.per_step) {
    cp.epsilon_prime = budget.epsilon;
    cp.delta_prime = budget.delta;
  } else {
    cp = composition_params(budget.epsilon, budget.delta, T);
  }

  RunRecord record;
  record.epsilon = budget.epsilon;
  record.delta = budget.delta;
  record.eta = eta;
  record.k1 = k1;
  record.k2 = k2;
  record.c = 1;
  record.T = T;
  record.seed = seed;
  record.mode = "adaptive";

  Rng adv_rng(seed, /*stream=*/3);
  std::vector<LabeledExample> prefix;
  std::vector<Predictor> published;
  std::vector<uint32_t> alive(cls.size());
  for (uint32_t i = 0; i < alive.size(); ++i) alive[i] = i;

  for (uint32_t t = 1; t <= T; ++t) {
    uint64_t inst_seed = derive_seed(seed, t);
    ForestState forest(cls, k1, k2, t, inst_seed);
    for (const LabeledExample& ex : prefix) forest.update(ex.x, ex.y);
    Rng inst_mech(inst_seed, /*stream=*/2);
    Predictor h = argmax_release(stable_histogram(
        forest.build_list(), cp.epsilon_prime, cp.delta_prime, eta, inst_mech));
    published.push_back(h);

    LabeledExample ex = adversary.next_example(published, adv_rng);
    if (ex.x >= cls.domain_size())
      throw std::runtime_error("adversary emitted an out-of-domain point");
    std::vector<uint32_t> kept;
    for (uint32_t i : alive)
      if (cls.hypothesis(i).get(ex.x) == ex.y) kept.push_back(i);
    if (kept.empty())
      throw std::runtime_error("adversary emitted a non-realizable example");
    alive = std::move(kept);

    bool yhat = h.has_value() ? h->get(ex.x) : false;
    RunRecordRow row;
    row.t = t;
    row.x = ex.x;
    row.y = ex.y ? 1 : 0;
    row.yhat = yhat ? 1 : 0;
    row.mistake = (yhat != ex.y) ? 1 : 0;
    row.pertinent_size = uint32_t(forest.pertinent_size());
    row.counter = 0;
    row.hist_call = 1;
    row.while_iters = uint32_t(forest.total_while_iters());
    record.rows.push_back(row);
    record.instance_seeds.push_back(inst_seed);
    record.total_while_iters += forest.total_while_iters();
    record.resets += forest.reset_count();

    prefix.push_back(ex);
  }
  return record;
}

}  // namespace dpsoa
