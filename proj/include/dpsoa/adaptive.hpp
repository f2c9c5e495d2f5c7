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

#include <memory>
#include <string>
#include <vector>

#include "dpsoa/forest.hpp"
#include "dpsoa/hypothesis.hpp"

namespace dpsoa {

// Per-step privacy budget under T-fold adaptive composition:
// delta' = delta/(2T), epsilon' = epsilon / (2 sqrt(2 T ln(1/delta))).
struct CompositionParams {
  double epsilon_prime = 0;
  double delta_prime = 0;
};

CompositionParams composition_params(double epsilon, double delta, int64_t T);

// An adversary emits the next labeled example as a function of everything
// published so far; every prefix it emits must stay realizable. The
// hypothesis for the current round is published before the example is
// requested, so at round t the history holds h_1..h_t.
class Adversary {
 public:
  virtual ~Adversary() = default;
  virtual LabeledExample next_example(const std::vector<Predictor>& published,
                                      Rng& rng) = 0;
};

// A fixed pre-chosen sequence (the oblivious case).
std::unique_ptr<Adversary> make_oblivious_adversary(
    std::vector<LabeledExample> seq);

// Named adaptive adversaries:
//   fixed-target  - picks a target hypothesis up front, emits uniform points
//                   with its labels (oblivious-equivalent);
//   disagree      - emits the smallest point where the last published
//                   fingerprint disagrees with some surviving consistent
//                   hypothesis, labeled to contradict the fingerprint;
//   mistake-tree  - walks a shattered mistake tree against the published
//                   predictions for Ldim rounds, then falls back to
//                   fixed-target.
std::unique_ptr<Adversary> build_adaptive_adversary(const std::string& name,
                                                    const HypothesisClass& cls,
                                                    uint64_t seed);

// Convenience: a realizable oblivious stream (uniform points, labels of a
// seed-chosen target hypothesis).
std::vector<LabeledExample> realizable_stream(const HypothesisClass& cls,
                                              uint32_t T, uint64_t seed);

struct AdaptiveBudget {
  double epsilon = 1.0;
  double delta = 0.01;
  // When false, (epsilon, delta) is the total budget and every per-round
  // instance runs at composition_params(epsilon, delta, T). When true,
  // (epsilon, delta) is spent directly per instance; the composed total then
  // follows from the same composition bound.
  bool per_step = false;
};

// The re-instantiation reduction: at each round build a fresh forest with
// fresh randomness, replay the prefix through it, publish a single stable
// histogram release of the final list, then query the adversary. Theta(T^2)
// forest rounds overall. Every prefix is certified realizable; a
// non-realizable emission throws.
RunRecord run_adaptive(const HypothesisClass& cls, Adversary& adversary,
                       const AdaptiveBudget& budget, uint32_t T, uint32_t k1,
                       uint32_t k2, double eta, uint64_t seed);

}  // namespace dpsoa
