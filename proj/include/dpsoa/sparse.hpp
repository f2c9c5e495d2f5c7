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

#include "dpsoa/mech.hpp"

namespace dpsoa {

// Parameters of the sparse-vector publisher. Derived quantities are fixed at
// init: sigma = 2c/(k*epsilon), theta = 1 - 3*eta/32, alpha = eta/32.
struct SparseParams {
  double epsilon = 0;
  double delta = 0;
  double eta = 0;
  int64_t c = 0;   // privacy budget in threshold crossings (hist calls)
  size_t k = 0;    // list length, fixed per run
  double beta = 0; // failure probability used by the sample-size thresholds

  SparseParams(double epsilon, double delta, double eta, int64_t c, size_t k,
               double beta);

  double sigma() const { return 2.0 * double(c) / (double(k) * epsilon); }
  double theta() const { return 1.0 - 3.0 * eta / 32.0; }
  double alpha() const { return eta / 32.0; }
};

enum class SvtResult { kTop, kBottom, kAborted };

// Above-threshold: answers a stream of 1/k-sensitive queries against a fixed
// threshold, paying privacy only on Top answers; aborts after c Tops. Calls
// made after the abort return kAborted (the budget-exhausted signal).
class AboveThreshold {
 public:
  // theta is the public threshold; sigma the threshold-noise scale; counter
  // starts at initial_counter (0 standalone, 1 when the caller already spent
  // a crossing on an initial histogram release).
  AboveThreshold(double theta, int64_t c, double sigma, int64_t initial_counter,
                 Rng& rng);

  SvtResult step(double query, Rng& rng);

  int64_t counter() const { return counter_; }
  bool aborted() const { return aborted_; }
  double noisy_threshold() const { return noisy_threshold_; }

 private:
  double theta_;
  double sigma_;
  int64_t c_;
  int64_t counter_;
  double noisy_threshold_;
  bool aborted_ = false;
};

// HistSparse: privately publishes a frequent element from a stream of
// 1-sensitive lists. Most rounds only verify that the current hypothesis is
// still frequent (free via above-threshold); a stable-histogram release is
// paid for only when it has lost frequency. Aborts after the c-th crossing,
// counting the initial release.
class HistSparse {
 public:
  // Initial release on the first list: h1 = argmax of
  // hist_{epsilon/(2c), delta/c, eta}(L1); counter starts at 1.
  HistSparse(const SparseParams& params, const HypList& first_list, Rng& rng);

  // One round: query Q_t = 1 - freq(L_t, current); on a Top answer the
  // current hypothesis is replaced by a fresh histogram release and the
  // noisy threshold refreshed. Returns the (possibly unchanged) current
  // hypothesis. The round that reaches the c-th crossing still publishes,
  // then the state is aborted; calling after that throws.
  Predictor step(const HypList& list, Rng& rng);

  const SparseParams& params() const { return params_; }
  const Predictor& current() const { return current_; }
  int64_t counter() const { return counter_; }
  bool aborted() const { return aborted_; }
  bool last_step_released() const { return last_released_; }
  double noisy_threshold() const { return noisy_threshold_; }

 private:
  Predictor release(const HypList& list, Rng& rng);

  SparseParams params_;
  Predictor current_;
  int64_t counter_;
  double noisy_threshold_;
  bool aborted_ = false;
  bool last_released_ = false;
};

// ceil of 8c (ln T + ln(2c/beta)) / (alpha * epsilon).
int64_t theta_sparse(int64_t c, double alpha, double beta, double epsilon,
                     int64_t T);

// max of theta_sparse (at alpha = eta/32) and the stable-histogram threshold.
int64_t theta_histsparse(int64_t c, double eta, int64_t T, double beta,
                         double epsilon, double delta);

}  // namespace dpsoa
