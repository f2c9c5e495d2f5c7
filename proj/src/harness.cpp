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

#include "dpsoa/harness.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <ostream>
#include <stdexcept>

#include "dpsoa/sparse.hpp"

namespace dpsoa {

double median(std::vector<double> values) {
  if (values.empty()) throw std::invalid_argument("median of empty set");
  std::sort(values.begin(), values.end());
  size_t n = values.size();
  if (n % 2 == 1) return values[n / 2];
  return 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

namespace {

double quantile_sorted(const std::vector<double>& sorted, double q) {
  if (sorted.empty()) return 0;
  double pos = q * double(sorted.size() - 1);
  size_t lo = size_t(pos);
  size_t hi = std::min(lo + 1, sorted.size() - 1);
  double frac = pos - double(lo);
  return sorted[lo] * (1 - frac) + sorted[hi] * frac;
}

}  // namespace

SummaryTable summarize(const std::vector<RunRecord>& records) {
  if (records.empty()) throw std::invalid_argument("summarize of empty batch");
  SummaryTable s;
  s.T = records[0].T;
  for (const RunRecord& r : records) {
    if (r.T != s.T) throw std::invalid_argument("mixed horizons in batch");
    SummaryTable::SeedRow row;
    row.seed = r.seed;
    row.mistakes = r.mistake_count();
    row.hist_calls = r.hist_call_count();
    row.aborted = r.aborted_at.has_value();
    s.per_seed.push_back(row);
    s.total_hist_calls += row.hist_calls;
    if (row.aborted) ++s.abort_count;
  }

  std::vector<double> mistakes;
  for (const auto& row : s.per_seed) mistakes.push_back(double(row.mistakes));
  std::sort(mistakes.begin(), mistakes.end());
  s.median_mistakes = quantile_sorted(mistakes, 0.5);
  s.q1_mistakes = quantile_sorted(mistakes, 0.25);
  s.q3_mistakes = quantile_sorted(mistakes, 0.75);

  for (uint32_t p = 1; p < s.T; p *= 2) s.curve_points.push_back(p);
  s.curve_points.push_back(s.T);
  for (uint32_t p : s.curve_points) {
    std::vector<double> at;
    for (const RunRecord& r : records) at.push_back(double(r.mistakes_up_to(p)));
    s.median_cumulative.push_back(median(std::move(at)));
  }

  std::vector<double> ratio_full, ratio_half;
  uint32_t half = std::max(1u, s.T / 2);
  for (const RunRecord& r : records) {
    ratio_full.push_back(double(r.mistake_count()) / double(s.T));
    ratio_half.push_back(double(r.mistakes_up_to(half)) / double(half));
  }
  s.ratio_at_T = median(std::move(ratio_full));
  s.ratio_at_half_T = median(std::move(ratio_half));
  return s;
}

namespace {

void print_double(std::ostream& out, double v) {
  char buf[64];
  snprintf(buf, sizeof buf, "%.17g", v);
  out << buf;
}

}  // namespace

void write_summary_csv(const SummaryTable& s, std::ostream& out) {
  out << "stat,seed,t,value\n";
  for (const auto& row : s.per_seed) {
    out << "mistakes," << row.seed << ',' << s.T << ',' << row.mistakes << '\n';
    out << "hist_calls," << row.seed << ',' << s.T << ',' << row.hist_calls
        << '\n';
    out << "aborted," << row.seed << ',' << s.T << ',' << (row.aborted ? 1 : 0)
        << '\n';
  }
  auto agg = [&](const char* name, double v, uint32_t t) {
    out << name << ",," << t << ',';
    print_double(out, v);
    out << '\n';
  };
  agg("median_mistakes", s.median_mistakes, s.T);
  agg("q1_mistakes", s.q1_mistakes, s.T);
  agg("q3_mistakes", s.q3_mistakes, s.T);
  out << "total_hist_calls,," << s.T << ',' << s.total_hist_calls << '\n';
  out << "abort_count,," << s.T << ',' << s.abort_count << '\n';
  for (size_t i = 0; i < s.curve_points.size(); ++i)
    agg("median_cumulative", s.median_cumulative[i], s.curve_points[i]);
  agg("ratio_at_T", s.ratio_at_T, s.T);
  agg("ratio_at_half_T", s.ratio_at_half_T, std::max(1u, s.T / 2));
}

namespace {

struct SideCounts {
  std::map<std::string, uint64_t> counts;
  void add(const std::string& key) { ++counts[key]; }
};

// One-sided epsilon estimate ln((lcb(p) - delta)/ucb(q)) with 3-sigma
// binomial confidence margins; nonpositive numerators are censored.
double direction_estimate(uint64_t ca, uint64_t cb, uint64_t n, double delta) {
  double p = double(ca) / double(n);
  double q = double(cb) / double(n);
  double pl = p - 3.0 * std::sqrt(p * (1 - p) / double(n));
  double qu = q + 3.0 * std::sqrt(q * (1 - q) / double(n));
  double num = pl - delta;
  if (num <= 0 || qu <= 0) return 0;
  return std::log(num / qu);
}

std::string above_threshold_transcript(const std::vector<double>& queries,
                                       double theta, int64_t c, double sigma,
                                       Rng& rng) {
  AboveThreshold svt(theta, c, sigma, /*initial_counter=*/0, rng);
  std::string s;
  for (double q : queries) {
    SvtResult r = svt.step(q, rng);
    if (r == SvtResult::kAborted) break;
    s.push_back(r == SvtResult::kTop ? 'T' : 'B');
  }
  return s;
}

}  // namespace

AuditReport audit(const std::string& mechanism, const std::string& neighbors,
                  double epsilon, double delta, uint64_t N, uint64_t seed,
                  int64_t c) {
  if (N < 10000) throw std::invalid_argument("insufficient trials");
  if (neighbors != "canonical" && neighbors != "identical")
    throw std::invalid_argument("unknown neighbor spec: " + neighbors);
  bool identical = neighbors == "identical";

  AuditReport report;
  report.mechanism = mechanism;
  report.neighbors = neighbors;
  report.trials = N;
  report.epsilon_budget = epsilon;
  report.delta = delta;
  report.slack = 3.0 * std::sqrt(2.0 / double(N)) * std::exp(epsilon);

  SideCounts a, b;
  Rng rng_a(seed, /*stream=*/100);
  Rng rng_b(seed, /*stream=*/101);

  if (mechanism == "laplace-count") {
    // Counting query, sensitivity 1, Laplace(1/epsilon), integer buckets.
    double count_a = 10, count_b = identical ? 10 : 11;
    for (uint64_t i = 0; i < N; ++i) {
      a.add(std::to_string(llround(count_a + laplace(1.0 / epsilon, rng_a))));
      b.add(std::to_string(llround(count_b + laplace(1.0 / epsilon, rng_b))));
    }
    report.delta = 0;  // pure epsilon mechanism
  } else if (mechanism == "stable-histogram") {
    uint32_t n = 4;
    BitVec f(n), g(n);
    g.set(0, true);
    size_t k = 40;
    HypList la(k), lb(k);
    for (size_t i = 0; i < k; ++i) {
      la[i] = (i < 30) ? Predictor(f) : Predictor(g);
      lb[i] = (i < (identical ? 30 : 29)) ? Predictor(f) : Predictor(g);
    }
    double eta = 0.5;
    auto bucket_of = [](const HistResult& h) {
      std::string key;
      for (const auto& [elem, val] : h) {
        if (!key.empty()) key.push_back('|');
        key += predictor_to_string(elem);
      }
      return key.empty() ? std::string("-") : key;
    };
    for (uint64_t i = 0; i < N; ++i) {
      a.add(bucket_of(stable_histogram(la, epsilon, delta, eta, rng_a)));
      b.add(bucket_of(stable_histogram(lb, epsilon, delta, eta, rng_b)));
    }
  } else if (mechanism == "above-threshold-stream") {
    // 1/k-sensitive queries hovering at the threshold; the neighbor stream
    // shifts every query by the full sensitivity in the distinguishing
    // direction.
    size_t k = 4;
    double theta = 0.5;
    double sigma = 2.0 * double(c) / (double(k) * epsilon);
    std::vector<double> qa, qb;
    for (int i = 0; i < 8; ++i) {
      double base = (i % 2 == 0) ? 0.5 : 0.25;
      qa.push_back(base);
      double shift = (i % 2 == 0) ? 0.25 : -0.25;
      qb.push_back(identical ? base : base + shift);
    }
    for (uint64_t i = 0; i < N; ++i) {
      a.add(above_threshold_transcript(qa, theta, c, sigma, rng_a));
      b.add(above_threshold_transcript(qb, theta, c, sigma, rng_b));
    }
    report.delta = 0;  // pure epsilon mechanism
  } else {
    throw std::invalid_argument("unknown mechanism: " + mechanism);
  }

  std::map<std::string, std::pair<uint64_t, uint64_t>> merged;
  for (const auto& [key, count] : a.counts) merged[key].first = count;
  for (const auto& [key, count] : b.counts) merged[key].second = count;

  double eps_hat = 0;
  for (const auto& [key, counts] : merged) {
    report.buckets.push_back({key, counts.first, counts.second});
    if (counts.first < 30 || counts.second < 30) continue;
    eps_hat = std::max(eps_hat, direction_estimate(counts.first, counts.second,
                                                   N, report.delta));
    eps_hat = std::max(eps_hat, direction_estimate(counts.second, counts.first,
                                                   N, report.delta));
  }
  report.epsilon_hat = eps_hat;
  double budget = identical ? 0.0 : epsilon;
  report.pass = eps_hat <= budget + report.slack;
  return report;
}

void write_audit_csv(const AuditReport& r, std::ostream& out) {
  out << "mechanism,neighbors,trials,epsilon,delta,epsilon_hat,slack,pass\n";
  out << r.mechanism << ',' << r.neighbors << ',' << r.trials << ',';
  print_double(out, r.epsilon_budget);
  out << ',';
  print_double(out, r.delta);
  out << ',';
  print_double(out, r.epsilon_hat);
  out << ',';
  print_double(out, r.slack);
  out << ',' << (r.pass ? 1 : 0) << '\n';
  out << "bucket,count_a,count_b\n";
  for (const auto& b : r.buckets)
    out << b.key << ',' << b.count_a << ',' << b.count_b << '\n';
}

}  // namespace dpsoa
