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

#include "dpsoa/mech.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace dpsoa {

PrivacyParams::PrivacyParams(double eps, double del) : epsilon(eps), delta(del) {
  if (!(epsilon > 0)) throw std::invalid_argument("epsilon must be positive");
  if (!(delta > 0 && delta < 1))
    throw std::invalid_argument("delta must lie in (0,1)");
}

Fraction freq(const HypList& list, const Predictor& f) {
  if (list.empty()) throw std::invalid_argument("freq of an empty list");
  int64_t count = 0;
  for (const Predictor& p : list)
    if (p == f) ++count;
  return Fraction{count, int64_t(list.size())};
}

double laplace(double scale, Rng& rng) {
  if (!(scale > 0)) throw std::invalid_argument("laplace scale must be positive");
  double u = rng.uniform_open() - 0.5;  // (-1/2, 1/2), endpoints excluded
  double sign = u < 0 ? -1.0 : 1.0;
  return -scale * sign * std::log(1.0 - 2.0 * std::fabs(u));
}

double theta_hist(double eta, double beta, double epsilon, double delta) {
  if (!(eta > 0 && eta <= 1)) throw std::invalid_argument("eta must be in (0,1]");
  if (!(beta > 0 && beta < 1)) throw std::invalid_argument("beta must be in (0,1)");
  if (!(epsilon > 0)) throw std::invalid_argument("epsilon must be positive");
  if (!(delta > 0 && delta < 1)) throw std::invalid_argument("delta must be in (0,1)");
  return 4.0 / eta + std::log(1.0 / (eta * eta * beta * delta)) / (eta * epsilon);
}

double stable_histogram_threshold(size_t k, double epsilon, double delta,
                                  double eta) {
  double margin = 1.0 / double(k) +
                  (2.0 / (double(k) * epsilon)) * std::log(2.0 / delta);
  return std::max(eta / 2.0, eta / 4.0 + margin);
}

HistResult stable_histogram(const HypList& list, double epsilon, double delta,
                            double eta, Rng& rng) {
  if (list.empty()) throw std::invalid_argument("histogram of an empty list");
  if (!(epsilon > 0)) throw std::invalid_argument("epsilon must be positive");
  if (!(delta > 0 && delta < 1)) throw std::invalid_argument("delta must be in (0,1)");
  if (!(eta > 0 && eta <= 1)) throw std::invalid_argument("eta must be in (0,1]");

  size_t k = list.size();
  std::map<Predictor, int64_t, PredictorLess> counts;
  for (const Predictor& p : list) {
    if (p.has_value()) ++counts[p];
  }

  double noise_scale = 2.0 / (double(k) * epsilon);
  double tau = stable_histogram_threshold(k, epsilon, delta, eta);
  HistResult out;
  for (const auto& [elem, count] : counts) {
    double noisy = double(count) / double(k) + laplace(noise_scale, rng);
    if (noisy > tau) out[elem] = std::clamp(noisy, 0.0, 1.0);
  }
  return out;
}

Predictor argmax_release(const HistResult& hist) {
  Predictor best;  // bottom
  double best_val = 0;
  for (const auto& [elem, val] : hist) {
    // Map iteration is in lexicographic order, so on ties the first (smaller)
    // fingerprint wins.
    if (!best.has_value() || val > best_val) {
      best = elem;
      best_val = val;
    }
  }
  return best;
}

}  // namespace dpsoa
