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

#include "dpsoa/sparse.hpp"

#include <cmath>
#include <stdexcept>

namespace dpsoa {

SparseParams::SparseParams(double epsilon_in, double delta_in, double eta_in,
                           int64_t c_in, size_t k_in, double beta_in)
    : epsilon(epsilon_in),
      delta(delta_in),
      eta(eta_in),
      c(c_in),
      k(k_in),
      beta(beta_in) {
  if (!(epsilon > 0)) throw std::invalid_argument("epsilon must be positive");
  if (!(delta > 0 && delta < 1))
    throw std::invalid_argument("delta must be in (0,1)");
  if (!(eta > 0 && eta <= 1)) throw std::invalid_argument("eta must be in (0,1]");
  if (c < 1) throw std::invalid_argument("c must be at least 1");
  if (k < 1) throw std::invalid_argument("k must be at least 1");
  if (!(beta > 0 && beta < 1))
    throw std::invalid_argument("beta must be in (0,1)");
}

AboveThreshold::AboveThreshold(double theta, int64_t c, double sigma,
                               int64_t initial_counter, Rng& rng)
    : theta_(theta), sigma_(sigma), c_(c), counter_(initial_counter) {
  if (c < 1) throw std::invalid_argument("c must be at least 1");
  if (!(sigma > 0)) throw std::invalid_argument("sigma must be positive");
  noisy_threshold_ = theta_ + laplace(sigma_, rng);
  if (counter_ >= c_) aborted_ = true;
}

SvtResult AboveThreshold::step(double query, Rng& rng) {
  if (aborted_) return SvtResult::kAborted;  // sparse-vector budget exhausted
  double nu = laplace(2.0 * sigma_, rng);
  if (query + nu >= noisy_threshold_) {
    ++counter_;
    noisy_threshold_ = theta_ + laplace(sigma_, rng);
    if (counter_ >= c_) aborted_ = true;
    return SvtResult::kTop;
  }
  return SvtResult::kBottom;
}

HistSparse::HistSparse(const SparseParams& params, const HypList& first_list,
                       Rng& rng)
    : params_(params) {
  if (first_list.size() != params_.k)
    throw std::invalid_argument("list length != k");
  noisy_threshold_ = params_.theta() + laplace(params_.sigma(), rng);
  current_ = release(first_list, rng);
  counter_ = 1;
  last_released_ = true;
  if (counter_ >= params_.c) aborted_ = true;
}

Predictor HistSparse::release(const HypList& list, Rng& rng) {
  return argmax_release(stable_histogram(list,
                                         params_.epsilon / (2.0 * double(params_.c)),
                                         params_.delta / double(params_.c),
                                         params_.eta, rng));
}

Predictor HistSparse::step(const HypList& list, Rng& rng) {
  if (aborted_) throw std::runtime_error("sparse-vector budget exhausted");
  if (list.size() != params_.k)
    throw std::invalid_argument("list length != k");
  double query = 1.0 - freq(list, current_).value();
  double nu = laplace(2.0 * params_.sigma(), rng);
  if (query + nu >= noisy_threshold_) {
    current_ = release(list, rng);
    ++counter_;
    noisy_threshold_ = params_.theta() + laplace(params_.sigma(), rng);
    last_released_ = true;
  } else {
    last_released_ = false;
  }
  // The abort check sits after the branch, so the crossing that exhausts the
  // budget still publishes its release.
  if (counter_ >= params_.c) aborted_ = true;
  return current_;
}

int64_t theta_sparse(int64_t c, double alpha, double beta, double epsilon,
                     int64_t T) {
  if (c < 1 || T < 1) throw std::invalid_argument("c and T must be positive");
  if (!(alpha > 0)) throw std::invalid_argument("alpha must be positive");
  if (!(beta > 0 && beta < 1))
    throw std::invalid_argument("beta must be in (0,1)");
  if (!(epsilon > 0)) throw std::invalid_argument("epsilon must be positive");
  double v = 8.0 * double(c) *
             (std::log(double(T)) + std::log(2.0 * double(c) / beta)) /
             (alpha * epsilon);
  return int64_t(std::ceil(v));
}

int64_t theta_histsparse(int64_t c, double eta, int64_t T, double beta,
                         double epsilon, double delta) {
  int64_t sparse_side = theta_sparse(c, eta / 32.0, beta, epsilon, T);
  int64_t hist_side = int64_t(std::ceil(theta_hist(eta, beta, epsilon, delta)));
  return std::max(sparse_side, hist_side);
}

}  // namespace dpsoa
