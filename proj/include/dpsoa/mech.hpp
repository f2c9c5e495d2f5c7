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
#include <map>
#include <numeric>
#include <vector>

#include "dpsoa/bitvec.hpp"
#include "dpsoa/rng.hpp"

namespace dpsoa {

struct PrivacyParams {
  double epsilon = 0;
  double delta = 0;

  PrivacyParams() = default;
  PrivacyParams(double eps, double del);
};

// Exact rational in [0,1] with a small denominator (a frequency count/k).
struct Fraction {
  int64_t num = 0;
  int64_t den = 1;

  double value() const { return double(num) / double(den); }

  friend bool operator==(const Fraction& a, const Fraction& b) {
    return a.num * b.den == b.num * a.den;
  }
  friend bool operator<(const Fraction& a, const Fraction& b) {
    return a.num * b.den < b.num * a.den;
  }
  friend bool operator<=(const Fraction& a, const Fraction& b) {
    return a.num * b.den <= b.num * a.den;
  }
};

// An ordered list of k predictors; bottom entries are counted by freq but are
// never candidates for release.
using HypList = std::vector<Predictor>;

// freq_L(f) = |{i : L[i] = f}| / k, exact.
Fraction freq(const HypList& list, const Predictor& f);

// One draw from the zero-mean Laplace distribution with scale b, by inverse
// CDF from a single uniform draw.
double laplace(double scale, Rng& rng);

// Sample-size threshold of the stable histogram contract:
// 4/eta + ln(1/(eta^2 * beta * delta)) / (eta * epsilon).
double theta_hist(double eta, double beta, double epsilon, double delta);

using HistResult = std::map<Predictor, double, PredictorLess>;

// Stable histogram release: each distinct non-bottom element with a nonzero
// count gets noisy frequency freq + Laplace(2/(k*epsilon)); elements whose
// noisy frequency clears the release threshold are returned with their
// estimate clamped to [0,1].
//
// The release threshold is
//   tau = max(eta/2, eta/4 + 1/k + (2/(k*epsilon)) * ln(2/delta)),
// so a bin present in one neighboring list but not the other passes with
// probability below delta, and released elements have true frequency above
// eta/4 up to the same margin. For k >= theta_hist the usual two-sided
// contract holds with probability 1 - beta.
HistResult stable_histogram(const HypList& list, double epsilon, double delta,
                            double eta, Rng& rng);

double stable_histogram_threshold(size_t k, double epsilon, double delta,
                                  double eta);

// The released element with the largest estimate, ties broken toward the
// lexicographically smaller fingerprint; bottom if nothing was released.
Predictor argmax_release(const HistResult& hist);

}  // namespace dpsoa
