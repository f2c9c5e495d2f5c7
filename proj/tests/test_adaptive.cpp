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

#include <doctest.h>

#include <stdexcept>

#include <algorithm>
#include <cmath>

#include "dpsoa/harness.hpp"

using namespace dpsoa;

TEST_CASE("composition_params") {
  CompositionParams p = composition_params(1.0, 0.01, 100);
  CHECK(p.delta_prime == doctest::Approx(5e-5).epsilon(1e-12));
  // Independent high-precision evaluation of 1/(2 sqrt(200 ln 100)).
  long double eps_ref =
      1.0L / (2.0L * sqrtl(2.0L * 100.0L * logl(1.0L / 0.01L)));
  CHECK(std::fabs(p.epsilon_prime - double(eps_ref)) < 1e-15);
  CHECK(p.epsilon_prime == doctest::Approx(0.0164751).epsilon(1e-6));

  // T = 1, delta = 1/e: epsilon' = epsilon / (2 sqrt 2).
  CompositionParams q = composition_params(2.0, std::exp(-1.0), 1);
  CHECK(q.epsilon_prime ==
        doctest::Approx(2.0 / (2.0 * std::sqrt(2.0))).epsilon(1e-12));

  double last = 1e9;
  for (int64_t T : {1, 2, 5, 20, 100, 1000}) {
    double e = composition_params(1.0, 0.05, T).epsilon_prime;
    CHECK(e < last);
    last = e;
  }

  CHECK_THROWS_AS(composition_params(1.0, 1.0, 10), std::invalid_argument);
  CHECK_THROWS_AS(composition_params(1.0, 0.01, 0), std::invalid_argument);
  CHECK_THROWS_AS(composition_params(-1.0, 0.01, 10), std::invalid_argument);
}

TEST_CASE("adversary construction") {
  HypothesisClass pts = HypothesisClass::points(4);
  CHECK_THROWS_AS(build_adaptive_adversary("nope", pts, 1),
                  std::invalid_argument);

  // fixed-target on a singleton class emits a constant-labeled stream.
  std::vector<BitVec> hs;
  BitVec h(3);
  h.set(1, true);
  hs.push_back(h);
  HypothesisClass single(3, hs);
  auto adv = build_adaptive_adversary("fixed-target", single, 5);
  Rng rng(5, 3);
  std::vector<Predictor> published;
  for (int t = 0; t < 20; ++t) {
    LabeledExample ex = adv->next_example(published, rng);
    CHECK(ex.y == h.get(ex.x));
  }
}

TEST_CASE("disagree adversary emits realizable prefixes") {
  HypothesisClass th4 = HypothesisClass::thresholds(4);
  auto adv = build_adaptive_adversary("disagree", th4, 11);
  Rng rng(11, 3);
  std::vector<Predictor> published;
  std::vector<LabeledExample> prefix;
  BitVec fp(4);
  for (int t = 0; t < 30; ++t) {
    published.emplace_back(fp);  // pretend the learner repeats all-zeros
    LabeledExample ex = adv->next_example(published, rng);
    prefix.push_back(ex);
    CHECK(is_realizable(th4, prefix));
  }
}

TEST_CASE("mistake-tree adversary forces Ldim mistakes out of the SOA") {
  for (uint32_t n = 2; n <= 4; ++n) {
    HypothesisClass full = HypothesisClass::full(n);
    auto adv = build_adaptive_adversary("mistake-tree", full, 3);
    Rng rng(3, 3);
    SoaState soa(full);
    std::vector<Predictor> published;
    std::vector<LabeledExample> prefix;
    int mistakes = 0;
    for (uint32_t t = 0; t < 3 * n; ++t) {
      published.emplace_back(soa.fingerprint());
      LabeledExample ex = adv->next_example(published, rng);
      prefix.push_back(ex);
      CHECK(is_realizable(full, prefix));
      if (soa.predict(ex.x) != ex.y) ++mistakes;
      soa.update(ex);
    }
    CHECK(mistakes >= int(n));          // d = n for the full class
    CHECK(soa.mistake_count() <= size_t(n));  // and never beyond the bound
  }
}

TEST_CASE("run_adaptive with T = 1 instantiates exactly one forest") {
  HypothesisClass pts = HypothesisClass::points(4);
  auto adv = build_adaptive_adversary("fixed-target", pts, 21);
  AdaptiveBudget budget;
  budget.epsilon = 1.0;
  budget.delta = 0.05;
  RunRecord rec = run_adaptive(pts, *adv, budget, 1, 2, 8, 0.25, 21);
  CHECK(rec.rows.size() == 1);
  CHECK(rec.instance_seeds.size() == 1);
  CHECK(rec.instance_seeds[0] == derive_seed(21, 1));
  CHECK(rec.mode == "adaptive");
}

TEST_CASE("run_adaptive rejects non-realizable adversaries") {
  HypothesisClass th2 = HypothesisClass::thresholds(2);
  // A malicious adversary that contradicts itself on round 2.
  struct Bad : Adversary {
    int t = 0;
    LabeledExample next_example(const std::vector<Predictor>&, Rng&) override {
      ++t;
      return t == 1 ? LabeledExample{0, true} : LabeledExample{1, false};
    }
  } bad;  // (0,1) forces the all-ones threshold; (1,0) contradicts it
  AdaptiveBudget budget;
  budget.per_step = true;
  budget.epsilon = 1.0;
  budget.delta = 0.01;
  CHECK_THROWS_WITH_AS(run_adaptive(th2, bad, budget, 2, 2, 4, 0.25, 1),
                       "adversary emitted a non-realizable example",
                       std::runtime_error);
}

TEST_CASE("a repeating adversary stops scoring once the fingerprint settles") {
  HypothesisClass pts = HypothesisClass::points(8);
  // Always the same labeled point; realizable via the matching singleton.
  struct Repeat : Adversary {
    LabeledExample next_example(const std::vector<Predictor>&, Rng&) override {
      return LabeledExample{5, true};
    }
  } adv;
  AdaptiveBudget budget;
  budget.per_step = true;
  budget.epsilon = 2.0;
  budget.delta = 0.01;
  const uint32_t T = 500;
  RunRecord rec = run_adaptive(pts, adv, budget, T, 4, 32, 0.05, 77);
  CHECK(rec.mistake_count() < T / 3);
  // After the fingerprint stabilizes on the point, mistakes stop.
  CHECK(rec.mistakes_up_to(T) == rec.mistakes_up_to(T - 200));
}

TEST_CASE("adaptive runner tracks the oblivious per-step-hist runner") {
  HypothesisClass pts = HypothesisClass::points(4);
  const uint32_t T = 60;
  AdaptiveBudget budget;
  budget.per_step = true;
  budget.epsilon = 2.0;
  budget.delta = 0.01;

  std::vector<double> adaptive_m, oblivious_m;
  for (uint64_t seed = 0; seed < 10; ++seed) {
    auto seq = realizable_stream(pts, T, seed);
    auto adv = make_oblivious_adversary(seq);
    RunRecord ra = run_adaptive(pts, *adv, budget, T, 4, 32, 0.125, seed);
    adaptive_m.push_back(double(ra.mistake_count()));

    DpSoaParams params;
    params.epsilon = 2.0;
    params.delta = 0.01;
    params.k1 = 4;
    params.k2 = 32;
    params.eta = 0.125;
    params.c = 1;
    params.mode = PublishMode::kPerStepHist;
    RunRecord ro = run_oblivious(pts, seq, params, seed);
    oblivious_m.push_back(double(ro.mistake_count()));
  }
  double ma = std::max(median(adaptive_m), 1.0);
  double mo = std::max(median(oblivious_m), 1.0);
  CHECK(ma / mo <= 2.0);
  CHECK(mo / ma <= 2.0);
}

TEST_CASE("twin adaptive transcripts keep per-step lists within one entry") {
  HypothesisClass th4 = HypothesisClass::thresholds(4);
  const BitVec& target = th4.hypothesis(3);
  const uint32_t T = 25;
  for (uint64_t seed = 0; seed < 4; ++seed) {
    Rng stream_rng(seed, 60);
    std::vector<LabeledExample> seq_a;
    for (uint32_t t = 0; t < T; ++t) {
      uint32_t x = uint32_t(stream_rng.below(4));
      seq_a.push_back({x, target.get(x)});
    }
    std::vector<LabeledExample> seq_b = seq_a;
    uint32_t tau = uint32_t(stream_rng.below(T));
    uint32_t nx = (seq_a[tau].x + 2) % 4;
    seq_b[tau] = {nx, target.get(nx)};

    // Mirror the runner's per-round instantiation with shared instance seeds
    // and compare the final lists the histogram would see.
    for (uint32_t t = 1; t <= T; ++t) {
      uint64_t inst_seed = derive_seed(seed, t);
      ForestState fa(th4, 2, 8, t, inst_seed);
      ForestState fb(th4, 2, 8, t, inst_seed);
      for (uint32_t i = 0; i + 1 < t; ++i) {
        fa.update(seq_a[i].x, seq_a[i].y);
        fb.update(seq_b[i].x, seq_b[i].y);
      }
      HypList la = fa.build_list(), lb = fb.build_list();
      int diff = 0;
      for (size_t i = 0; i < la.size(); ++i)
        if (la[i] != lb[i]) ++diff;
      CHECK(diff <= 1);
    }
  }
}
