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

#include "dpsoa/forest.hpp"

#include <boost/multiprecision/cpp_bin_float.hpp>
#include <cmath>
#include <cstdlib>
#include <ostream>
#include <stdexcept>

namespace dpsoa {

namespace {

uint32_t ilog2(uint32_t v) {
  uint32_t r = 0;
  while (v > 1) {
    v >>= 1;
    ++r;
  }
  return r;
}

}  // namespace

ForestState::ForestState(const HypothesisClass& cls, uint32_t k1, uint32_t k2,
                         uint32_t T, uint64_t seed)
    : cls_(&cls), k1_(k1), k2_(k2), T_(T) {
  if (k1 < 2 || (k1 & (k1 - 1)) != 0)
    throw std::invalid_argument("k1 must be a power of two >= 2");
  if (k2 < 1) throw std::invalid_argument("k2 must be >= 1");
  if (T < 1) throw std::invalid_argument("T must be >= 1");
  height_ = ilog2(k1_);
  per_tree_ = 2 * size_t(k1_) - 1;
  vertices_.resize(per_tree_ * k2_);

  SoaState fresh(cls);
  BitVec fresh_fp = fresh.fingerprint();
  for (uint32_t tree = 0; tree < k2_; ++tree) {
    for (uint32_t pos = 0; pos < k1_; ++pos) {
      Vertex& v = vertices_[leaf_id(tree, pos)];
      v.sample = std::vector<LabeledExample>{};
      v.soa = fresh;
      v.cached = fresh_fp;
      v.pertinent = true;
    }
  }
  pertinent_count_ = size_t(k1_) * k2_;

  Rng pi_rng(seed, /*stream=*/0);
  pi_.resize(T_);
  for (uint32_t t = 0; t < T_; ++t) {
    uint64_t ord = pi_rng.below(uint64_t(k1_) * k2_);
    pi_[t] = leaf_id(uint32_t(ord / k1_), uint32_t(ord % k1_));
  }

  Rng guess_rng(seed, /*stream=*/1);
  guesses_.resize(vertices_.size());
  for (auto& g : guesses_) g = guess_rng.bit() ? 1 : 0;

  reps_.resize(k2_);
  for (uint32_t tree = 0; tree < k2_; ++tree) reps_[tree] = leaf_id(tree, 0);

  tree_rngs_.reserve(k2_);
  for (uint32_t tree = 0; tree < k2_; ++tree)
    tree_rngs_.emplace_back(seed, /*stream=*/16 + uint64_t(tree));
}

size_t ForestState::parent(size_t id) const {
  uint32_t local = local_of(id);
  if (local == 0) throw std::logic_error("root has no parent");
  return id - local + (local - 1) / 2;
}

size_t ForestState::sibling(size_t id) const {
  uint32_t local = local_of(id);
  if (local == 0) throw std::logic_error("root has no sibling");
  return (local & 1) ? id + 1 : id - 1;
}

uint32_t ForestState::depth_of(size_t id) const {
  uint32_t local = local_of(id);
  uint32_t level = ilog2(local + 1);
  return height_ - level;
}

size_t ForestState::leaf_id(uint32_t tree, uint32_t leaf_pos) const {
  return size_t(tree) * per_tree_ + (k1_ - 1) + leaf_pos;
}

size_t ForestState::pertinent_ancestor(size_t leaf) const {
  size_t id = leaf;
  for (;;) {
    if (vertices_[id].pertinent) return id;
    if (is_tree_root(id))
      throw std::logic_error("leaf has no pertinent ancestor");
    id = parent(id);
  }
}

void ForestState::refresh_cached(size_t id) {
  Vertex& v = vertices_[id];
  v.cached = v.soa.has_value() ? Predictor(v.soa->fingerprint()) : std::nullopt;
}

void ForestState::append_example(size_t id, const LabeledExample& ex,
                                 bool merged) {
  Vertex& v = vertices_[id];
  if (!v.sample.has_value()) return;  // bottom absorbs appends
  if (merged) v.merge_marks.push_back(uint32_t(v.sample->size()));
  v.sample->push_back(ex);
  v.soa->absorb(ex);
  refresh_cached(id);
}

ForestState::StepStats ForestState::update(uint32_t x, bool y) {
  if (round_ >= T_) throw std::logic_error("run past the horizon");
  if (x >= cls_->domain_size())
    throw std::out_of_range("domain point out of range");

  StepStats stats;
  stats.pertinent_before = uint32_t(pertinent_count_);
  size_t leaf = pi_[round_];
  ++round_;
  uint32_t tree = tree_of(leaf);

  size_t v1 = pertinent_ancestor(leaf);
  append_example(v1, LabeledExample{x, y}, /*merged=*/false);
  stats.changed.push_back(v1);

  if (!is_tree_root(v1)) {
    size_t v2 = sibling(v1);
    while (vertices_[v2].pertinent &&
           vertices_[v1].cached != vertices_[v2].cached) {
      size_t par = parent(v1);
      const Predictor& p1 = vertices_[v1].cached;
      const Predictor& p2 = vertices_[v2].cached;
      bool ybar = guesses_[par] != 0;
      uint32_t xbar = 0;
      size_t erring;
      if (p1.has_value() && p2.has_value()) {
        xbar = uint32_t(first_disagreement(*p1, *p2));
        erring = (p1->get(xbar) != ybar) ? v1 : v2;
      } else {
        // Bottom disagrees with everything; charge the bottom side at point 0.
        erring = p1.has_value() ? v2 : v1;
      }

      Vertex& pv = vertices_[par];
      const Vertex& ev = vertices_[erring];
      if (ev.sample.has_value()) {
        pv.sample = ev.sample;
        pv.merge_marks = ev.merge_marks;
        pv.soa = ev.soa;
        append_example(par, LabeledExample{xbar, ybar}, /*merged=*/true);
      } else {
        pv.sample = std::nullopt;
        pv.merge_marks.clear();
        pv.soa.reset();
        pv.cached = std::nullopt;
      }
      vertices_[v1].pertinent = false;
      vertices_[v2].pertinent = false;
      pv.pertinent = true;
      --pertinent_count_;
      ++total_while_iters_;
      ++stats.while_iters;
      stats.changed.push_back(par);

      v1 = par;
      if (is_tree_root(v1)) break;
      v2 = sibling(v1);
    }
  }

  if (stats.while_iters > 0) {
    std::vector<size_t> candidates;
    for (uint32_t local = 1; local < per_tree_; ++local) {
      size_t id = size_t(tree) * per_tree_ + local;
      if (!vertices_[id].pertinent) continue;
      size_t sib = sibling(id);
      if (!vertices_[sib].pertinent) continue;
      if (vertices_[id].cached == vertices_[sib].cached)
        candidates.push_back(id);
    }
    if (candidates.empty()) {
      for (uint32_t local = 0; local < per_tree_; ++local) {
        size_t id = size_t(tree) * per_tree_ + local;
        if (vertices_[id].pertinent) {
          vertices_[id].pertinent = false;
          --pertinent_count_;
        }
      }
      size_t root = size_t(tree) * per_tree_;
      Vertex& rv = vertices_[root];
      rv.sample = std::nullopt;
      rv.merge_marks.clear();
      rv.soa.reset();
      rv.cached = std::nullopt;
      rv.pertinent = true;
      ++pertinent_count_;
      reps_[tree] = root;
      ++reset_count_;
      stats.reset = true;
      stats.changed.push_back(root);
    } else {
      reps_[tree] = candidates[tree_rngs_[tree].below(candidates.size())];
    }
  }
  return stats;
}

HypList ForestState::build_list() const {
  HypList list;
  list.reserve(k2_);
  for (uint32_t tree = 0; tree < k2_; ++tree)
    list.push_back(vertices_[reps_[tree]].cached);
  return list;
}

void verify_forest_invariants(const ForestState& forest,
                              const std::vector<size_t>& changed) {
  // Leaf cover: exactly one pertinent vertex on each leaf-to-root path.
  for (uint32_t tree = 0; tree < forest.k2(); ++tree) {
    for (uint32_t pos = 0; pos < forest.k1(); ++pos) {
      size_t id = forest.leaf_id(tree, pos);
      int covered = 0;
      for (;;) {
        if (forest.vertex(id).pertinent) ++covered;
        if (forest.is_tree_root(id)) break;
        id = forest.parent(id);
      }
      if (covered != 1)
        throw std::logic_error("leaf cover violated: covered " +
                               std::to_string(covered) + " times");
    }
  }
  // Representatives are pertinent vertices of their own tree.
  for (uint32_t tree = 0; tree < forest.k2(); ++tree) {
    size_t rep = forest.representative(tree);
    if (forest.tree_of(rep) != tree || !forest.vertex(rep).pertinent)
      throw std::logic_error("representative invalid");
  }
  // Depth-mistake law on every changed vertex: replaying the sample forces a
  // mistake at each merge mark, the marks number exactly depth(v), the total
  // replay mistake count is at least depth(v), and the cached predictor
  // agrees with the replay.
  for (size_t id : changed) {
    const Vertex& v = forest.vertex(id);
    if (!v.sample.has_value()) {
      if (v.cached.has_value())
        throw std::logic_error("bottom sample with non-bottom predictor");
      continue;
    }
    uint32_t depth = forest.depth_of(id);
    if (v.merge_marks.size() != depth)
      throw std::logic_error("merge mark count != vertex depth");
    SoaState replay(forest.base());
    size_t mark_idx = 0;
    uint32_t mistakes = 0;
    for (uint32_t pos = 0; pos < v.sample->size(); ++pos) {
      const LabeledExample& ex = (*v.sample)[pos];
      bool predicted = replay.predict(ex.x);
      bool mistake = predicted != ex.y;
      if (mark_idx < v.merge_marks.size() && v.merge_marks[mark_idx] == pos) {
        if (!mistake)
          throw std::logic_error("merge-appended example did not force a mistake");
        ++mark_idx;
      }
      if (mistake) ++mistakes;
      replay.absorb(ex);
    }
    if (mistakes < depth)
      throw std::logic_error("replay mistakes below vertex depth");
    if (Predictor(replay.fingerprint()) != v.cached)
      throw std::logic_error("cached predictor disagrees with replay");
  }
}

uint64_t RunRecord::mistake_count() const {
  uint64_t m = 0;
  for (const auto& r : rows) m += r.mistake;
  return m;
}

uint64_t RunRecord::mistakes_up_to(uint32_t t) const {
  uint64_t m = 0;
  for (const auto& r : rows)
    if (r.t <= t) m += r.mistake;
  return m;
}

uint64_t RunRecord::hist_call_count() const {
  uint64_t m = 0;
  for (const auto& r : rows) m += r.hist_call;
  return m;
}

void write_csv(const RunRecord& record, std::ostream& out) {
  bool adaptive = !record.instance_seeds.empty();
  out << "t,x,y,yhat,mistake,pertinent_size,counter,hist_call,while_iters";
  if (adaptive) out << ",instance_seed";
  out << '\n';
  for (size_t i = 0; i < record.rows.size(); ++i) {
    const RunRecordRow& r = record.rows[i];
    out << r.t << ',' << r.x << ',' << int(r.y) << ',' << int(r.yhat) << ','
        << int(r.mistake) << ',' << r.pertinent_size << ',' << r.counter << ','
        << int(r.hist_call) << ',' << r.while_iters;
    if (adaptive) out << ',' << record.instance_seeds[i];
    out << '\n';
  }
}

namespace {

bool strict_mode_env() {
  const char* v = std::getenv("DPSOA_TEST_MODE");
  return v != nullptr && std::string(v) == "strict";
}

}  // namespace

DpSoaRunner::DpSoaRunner(const HypothesisClass& cls, const DpSoaParams& params,
                         uint32_t T, uint64_t seed)
    : cls_(&cls),
      params_(params),
      T_(T),
      forest_(cls, params.k1, params.k2, T, seed),
      mech_rng_(seed, /*stream=*/2) {
  params_.strict_checks = params_.strict_checks || strict_mode_env();
  record_.epsilon = params_.epsilon;
  record_.delta = params_.delta;
  record_.eta = params_.eta;
  record_.k1 = params_.k1;
  record_.k2 = params_.k2;
  record_.c = params_.c;
  record_.T = T;
  record_.seed = seed;
  record_.mode =
      params_.mode == PublishMode::kHistSparse ? "histsparse" : "hist";
}

bool DpSoaRunner::aborted() const {
  return sparse_.has_value() && sparse_->aborted();
}

bool DpSoaRunner::step(uint32_t x, bool y) {
  ++t_;
  HypList list = forest_.build_list();
  bool hist_call = false;
  if (params_.mode == PublishMode::kPerStepHist) {
    current_ = argmax_release(stable_histogram(list, params_.epsilon,
                                               params_.delta, params_.eta,
                                               mech_rng_));
    hist_call = true;
  } else if (!sparse_.has_value()) {
    // beta only feeds the sample-size thresholds; 1/T is the choice the
    // utility analysis makes.
    SparseParams sp(params_.epsilon, params_.delta, params_.eta, params_.c,
                    params_.k2, 1.0 / double(T_));
    sparse_.emplace(sp, list, mech_rng_);
    current_ = sparse_->current();
    hist_call = true;
    if (sparse_->aborted()) record_.aborted_at = t_;
  } else if (sparse_->aborted()) {
    // Publisher out of budget: keep predicting with the last hypothesis.
  } else {
    current_ = sparse_->step(list, mech_rng_);
    hist_call = sparse_->last_step_released();
    if (sparse_->aborted() && !record_.aborted_at.has_value())
      record_.aborted_at = t_;
  }

  bool yhat = current_.has_value() ? current_->get(x) : false;
  ForestState::StepStats stats = forest_.update(x, y);
  if (params_.strict_checks) verify_forest_invariants(forest_, stats.changed);

  RunRecordRow row;
  row.t = t_;
  row.x = x;
  row.y = y ? 1 : 0;
  row.yhat = yhat ? 1 : 0;
  row.mistake = (yhat != y) ? 1 : 0;
  row.pertinent_size = stats.pertinent_before;
  row.counter = sparse_.has_value() ? sparse_->counter() : 0;
  row.hist_call = hist_call ? 1 : 0;
  row.while_iters = stats.while_iters;
  record_.rows.push_back(row);
  record_.total_while_iters = forest_.total_while_iters();
  record_.resets = forest_.reset_count();
  return yhat;
}

RunRecord DpSoaRunner::take_record() { return std::move(record_); }

RunRecord run_oblivious(const HypothesisClass& cls,
                        const std::vector<LabeledExample>& seq,
                        const DpSoaParams& params, uint64_t seed) {
  if (seq.empty()) throw std::invalid_argument("empty input sequence");
  if (!is_realizable(cls, seq))
    throw std::runtime_error("input sequence is not realizable");
  DpSoaRunner runner(cls, params, uint32_t(seq.size()), seed);
  for (const LabeledExample& ex : seq) runner.step(ex.x, ex.y);
  return runner.take_record();
}

TheoryParams theory_params(int d, int64_t T, double epsilon, double delta) {
  using boost::multiprecision::cpp_int;
  using boost::multiprecision::cpp_rational;
  using Big = boost::multiprecision::cpp_bin_float_100;

  if (d < 0) throw std::invalid_argument("d must be nonnegative");
  if (T < 1) throw std::invalid_argument("T must be >= 1");
  if (!(epsilon > 0)) throw std::invalid_argument("epsilon must be positive");
  if (!(delta > 0 && delta < 1))
    throw std::invalid_argument("delta must be in (0,1)");

  int64_t k1 = std::max(int64_t{1} << (d + 1), int64_t{20});
  cpp_int two_pow = cpp_int(1) << (4 * k1 + 2);
  cpp_rational eta(cpp_int(1), two_pow * k1);
  cpp_int c = cpp_int(4) * k1 * k1 * two_pow;  // 4 k1 / eta

  double beta = 1.0 / double(T);
  Big eta_f = Big(1) / (Big(two_pow) * k1);

  // Stability threshold: 2^(8k1+6) k1^2 ln(5 T ln(k1) / beta).
  Big log_g = log(Big(5) * Big(T) * log(Big(k1)) / beta);
  Big theta_g = Big(cpp_int((cpp_int(1) << (8 * k1 + 6)) * k1 * k1)) * log_g;

  // Publisher thresholds at the theory eta and c.
  Big ln_t = log(Big(T));
  Big ln_2c_beta = log(Big(2) * Big(c) / beta);
  Big theta_sp = Big(8) * Big(c) * (ln_t + ln_2c_beta) / (eta_f / 32 * epsilon);
  Big inv_eta = 1 / eta_f;
  Big theta_h =
      4 * inv_eta + log(inv_eta * inv_eta / (beta * delta)) * inv_eta / epsilon;

  Big k2_f = theta_sp;
  if (theta_h > k2_f) k2_f = theta_h;
  if (theta_g > k2_f) k2_f = theta_g;

  TheoryParams out;
  out.k1 = int(k1);
  out.eta = eta;
  out.c = c;
  out.k2 = boost::multiprecision::ceil(k2_f).convert_to<cpp_int>();
  return out;
}

}  // namespace dpsoa
