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

#include <boost/multiprecision/cpp_int.hpp>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "dpsoa/hypothesis.hpp"
#include "dpsoa/mech.hpp"
#include "dpsoa/sparse.hpp"

namespace dpsoa {

// One tree node. Leaves start with the empty sequence, non-leaves with the
// bottom sample. merge_marks are the positions of examples appended by
// tournament merges; replaying the sample forces a mistake at each of them,
// so their count always equals the vertex's depth.
struct Vertex {
  Sample sample;
  std::vector<uint32_t> merge_marks;
  std::optional<SoaState> soa;  // incremental replay; empty iff sample is bottom
  Predictor cached;             // = run_total(cls, sample).predictor
  bool pertinent = false;
};

// The DP-SOA forest: k2 full binary trees with k1 leaves each, a random leaf
// assignment for every round, the pertinent set, and one representative
// vertex per tree. All randomness except the publisher's lives here and is
// fixed up front (leaf map, one guessed label per non-leaf vertex) or split
// into per-tree streams (representative re-picks), so coupled twin runs keep
// their unaffected trees bit-identical.
class ForestState {
 public:
  ForestState(const HypothesisClass& cls, uint32_t k1, uint32_t k2, uint32_t T,
              uint64_t seed);

  struct StepStats {
    uint32_t while_iters = 0;
    bool reset = false;
    uint32_t pertinent_before = 0;
    std::vector<size_t> changed;  // vertices whose sample changed this round
  };

  // Forest half of one round: route (x_t, y_t) to the pertinent ancestor of
  // the drawn leaf, run the tournament loop, re-pick the representative of
  // the touched tree.
  StepStats update(uint32_t x, bool y);

  // L_t = (A(S of representative of tree i))_i, in tree order.
  HypList build_list() const;

  const HypothesisClass& base() const { return *cls_; }
  uint32_t k1() const { return k1_; }
  uint32_t k2() const { return k2_; }
  uint32_t horizon() const { return T_; }
  uint32_t round() const { return round_; }
  uint32_t height() const { return height_; }

  size_t vertex_count() const { return vertices_.size(); }
  const Vertex& vertex(size_t id) const { return vertices_[id]; }
  size_t pertinent_size() const { return pertinent_count_; }
  uint64_t total_while_iters() const { return total_while_iters_; }
  uint32_t reset_count() const { return reset_count_; }

  uint32_t tree_of(size_t id) const { return uint32_t(id / per_tree_); }
  uint32_t local_of(size_t id) const { return uint32_t(id % per_tree_); }
  bool is_leaf(size_t id) const { return local_of(id) >= k1_ - 1; }
  bool is_tree_root(size_t id) const { return local_of(id) == 0; }
  size_t parent(size_t id) const;
  size_t sibling(size_t id) const;
  // Distance from the vertex to its leaves.
  uint32_t depth_of(size_t id) const;

  size_t leaf_id(uint32_t tree, uint32_t leaf_pos) const;
  size_t representative(uint32_t tree) const { return reps_[tree]; }
  size_t leaf_assignment(uint32_t t) const { return pi_[t]; }

  // Unique pertinent ancestor-or-self of a leaf.
  size_t pertinent_ancestor(size_t leaf) const;

 private:
  void append_example(size_t id, const LabeledExample& ex, bool merged);
  void refresh_cached(size_t id);

  const HypothesisClass* cls_;
  uint32_t k1_, k2_, T_;
  uint32_t height_;
  size_t per_tree_;
  uint32_t round_ = 0;
  std::vector<Vertex> vertices_;
  size_t pertinent_count_ = 0;
  std::vector<size_t> pi_;        // round -> global leaf id
  std::vector<uint8_t> guesses_;  // one pre-drawn label per vertex
  std::vector<size_t> reps_;
  std::vector<Rng> tree_rngs_;
  uint64_t total_while_iters_ = 0;
  uint32_t reset_count_ = 0;
};

// Throws std::logic_error if a forest invariant fails: unique pertinent
// ancestor per leaf, and for every changed vertex agreement between the
// cached predictor and a fresh replay, replay mistakes >= depth, and one
// forced replay mistake per merge mark with exactly depth marks.
void verify_forest_invariants(const ForestState& forest,
                              const std::vector<size_t>& changed);

enum class PublishMode { kHistSparse, kPerStepHist };

struct DpSoaParams {
  double epsilon = 1.0;
  double delta = 0.01;
  uint32_t k1 = 4;
  uint32_t k2 = 64;
  double eta = 0.5;
  int64_t c = 4;
  PublishMode mode = PublishMode::kHistSparse;
  bool strict_checks = false;
};

struct RunRecordRow {
  uint32_t t = 0;  // 1-based round
  uint32_t x = 0;
  uint8_t y = 0;
  uint8_t yhat = 0;
  uint8_t mistake = 0;
  uint32_t pertinent_size = 0;  // |V_t| at list-building time
  int64_t counter = 0;
  uint8_t hist_call = 0;
  uint32_t while_iters = 0;
};

// Per-round transcript of a run plus the config echo needed to reproduce it.
struct RunRecord {
  double epsilon = 0, delta = 0, eta = 0;
  uint32_t k1 = 0, k2 = 0, T = 0;
  int64_t c = 0;
  uint64_t seed = 0;
  std::string mode;  // "histsparse" | "hist" | "adaptive"
  std::vector<RunRecordRow> rows;
  std::vector<uint64_t> instance_seeds;  // adaptive runs only, one per round
  std::optional<uint32_t> aborted_at;
  uint64_t total_while_iters = 0;
  uint32_t resets = 0;

  uint64_t mistake_count() const;
  uint64_t mistakes_up_to(uint32_t t) const;
  uint64_t hist_call_count() const;
};

// CSV with header t,x,y,yhat,mistake,pertinent_size,counter,hist_call,
// while_iters; adaptive records append an instance_seed column.
void write_csv(const RunRecord& record, std::ostream& out);

// The full oblivious learner: forest plus publisher, stepped one round at a
// time. Rounds after a publisher abort keep predicting with the last
// hypothesis and keep updating the forest.
class DpSoaRunner {
 public:
  DpSoaRunner(const HypothesisClass& cls, const DpSoaParams& params, uint32_t T,
              uint64_t seed);

  bool step(uint32_t x, bool y);

  const RunRecord& record() const { return record_; }
  RunRecord take_record();
  ForestState& forest() { return forest_; }
  const Predictor& current_hypothesis() const { return current_; }
  bool aborted() const;

 private:
  const HypothesisClass* cls_;
  DpSoaParams params_;
  uint32_t T_;
  ForestState forest_;
  Rng mech_rng_;
  std::optional<HistSparse> sparse_;
  Predictor current_;
  RunRecord record_;
  uint32_t t_ = 0;
};

// Run DP-SOA over a realizable sequence. Throws before execution if no
// hypothesis of the class is consistent with the whole sequence.
RunRecord run_oblivious(const HypothesisClass& cls,
                        const std::vector<LabeledExample>& seq,
                        const DpSoaParams& params, uint64_t seed);

// Parameter values from the analysis, in exact arithmetic (they overflow
// machine floats for d >= 1): k1 = max(2^(d+1), 20), eta = 2^(-4k1-2)/k1,
// c = 4 k1/eta, and k2 the larger of the publisher and stability thresholds
// at beta = 1/T. Useful for unit checks, far too large to run.
struct TheoryParams {
  int k1 = 0;
  boost::multiprecision::cpp_rational eta;
  boost::multiprecision::cpp_int c;
  boost::multiprecision::cpp_int k2;
};

TheoryParams theory_params(int d, int64_t T, double epsilon, double delta);

}  // namespace dpsoa
