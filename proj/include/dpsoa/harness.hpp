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
#include <iosfwd>
#include <string>
#include <vector>

#include "dpsoa/forest.hpp"

namespace dpsoa {

// Cross-seed summary of a batch of runs over the same horizon.
struct SummaryTable {
  struct SeedRow {
    uint64_t seed = 0;
    uint64_t mistakes = 0;
    uint64_t hist_calls = 0;
    bool aborted = false;
  };
  uint32_t T = 0;
  std::vector<SeedRow> per_seed;
  double median_mistakes = 0, q1_mistakes = 0, q3_mistakes = 0;
  uint64_t total_hist_calls = 0;
  uint32_t abort_count = 0;
  std::vector<uint32_t> curve_points;      // powers of two up to T, then T
  std::vector<double> median_cumulative;   // median mistakes at each point
  double ratio_at_T = 0;       // median of mistakes(T)/T
  double ratio_at_half_T = 0;  // median of mistakes(T/2)/(T/2)
};

SummaryTable summarize(const std::vector<RunRecord>& records);
void write_summary_csv(const SummaryTable& summary, std::ostream& out);

double median(std::vector<double> values);

// Empirical privacy probe: run both sides of a neighboring pair N times,
// bucket the outcomes, and lower-bound the distinguishing epsilon from
// bucket frequencies with 3-sigma confidence margins and the delta
// correction. A sanity check at bucket granularity, not a verifier.
struct AuditReport {
  std::string mechanism;
  std::string neighbors;  // "canonical" | "identical"
  uint64_t trials = 0;
  double epsilon_budget = 0;
  double delta = 0;
  double epsilon_hat = 0;
  double slack = 0;
  bool pass = false;
  struct Bucket {
    std::string key;
    uint64_t count_a = 0;
    uint64_t count_b = 0;
  };
  std::vector<Bucket> buckets;
};

// mechanism: laplace-count | stable-histogram | above-threshold-stream.
// neighbors: canonical (built-in pair differing in one element) | identical.
// c is the crossing budget for the above-threshold stream.
AuditReport audit(const std::string& mechanism, const std::string& neighbors,
                  double epsilon, double delta, uint64_t N, uint64_t seed,
                  int64_t c = 2);

void write_audit_csv(const AuditReport& report, std::ostream& out);

// CLI entry points. Subcommands: ldim, soa-run, dpsoa-run, adaptive-run,
// hist-demo, audit, params. Returns the process exit code: 0 ok, 1 runtime
// error, 2 usage error.
int cli(const std::vector<std::string>& args, std::ostream& out,
        std::ostream& err);
int cli(int argc, char** argv);

}  // namespace dpsoa
