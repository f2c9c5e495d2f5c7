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

#include <CLI11.hpp>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <sstream>

#include "dpsoa/adaptive.hpp"
#include "dpsoa/harness.hpp"

namespace dpsoa {

namespace {

using nlohmann::json;

void write_sidecar(const std::string& out_path, const json& config) {
  std::ofstream f(out_path + ".config");
  if (!f) throw std::runtime_error("cannot write sidecar for " + out_path);
  f << config.dump(2) << '\n';
}

std::ofstream open_out(const std::string& path) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot open output file " + path);
  return f;
}

struct RunFlags {
  std::string class_spec;
  std::string adversary = "fixed-target";
  uint32_t T = 200;
  double epsilon = 1.0, delta = 0.01;
  std::string params_mode = "explicit";
  uint32_t k1 = 0, k2 = 0;
  double eta = 0;
  int64_t c = 0;
  uint64_t seed = 1;
  uint32_t trials = 1;
  std::string out;
  std::string mode = "histsparse";
  bool per_step = false;
};

void add_common_run_flags(CLI::App* cmd, RunFlags& f) {
  cmd->add_option("--class", f.class_spec, "class generator or file path")
      ->required();
  cmd->add_option("--T", f.T, "number of rounds");
  cmd->add_option("--epsilon", f.epsilon, "privacy budget epsilon");
  cmd->add_option("--delta", f.delta, "privacy budget delta");
  cmd->add_option("--k1", f.k1, "leaves per tree (power of two)");
  cmd->add_option("--k2", f.k2, "number of trees");
  cmd->add_option("--eta", f.eta, "frequency threshold eta");
  cmd->add_option("--c", f.c, "sparse-vector crossing budget");
  cmd->add_option("--params", f.params_mode, "theory|explicit");
  cmd->add_option("--seed", f.seed, "base RNG seed");
  cmd->add_option("--trials", f.trials, "number of seeded trials");
  cmd->add_option("--out", f.out, "output CSV path")->required();
}

void resolve_algorithm_params(const RunFlags& f, const HypothesisClass& cls,
                              bool need_c) {
  if (f.params_mode == "theory") {
    TheoryParams tp = theory_params(cls.ldim(), f.T, f.epsilon, f.delta);
    std::ostringstream msg;
    msg << "theory parameters are not runnable at this scale: k1 = " << tp.k1
        << ", eta = " << tp.eta << ", c = " << tp.c << ", k2 = " << tp.k2
        << "; rerun with --params explicit and operator-chosen values";
    throw std::runtime_error(msg.str());
  }
  if (f.params_mode != "explicit")
    throw CLI::ValidationError("--params", "must be theory or explicit");
  if (f.k1 == 0 || f.k2 == 0 || !(f.eta > 0) || (need_c && f.c <= 0))
    throw CLI::ValidationError(
        "--params",
        "explicit mode requires --k1, --k2, --eta" +
            std::string(need_c ? " and --c" : ""));
}

json run_flags_json(const char* cmd, const RunFlags& f) {
  json j;
  j["subcommand"] = cmd;
  j["class"] = f.class_spec;
  j["adversary"] = f.adversary;
  j["T"] = f.T;
  j["epsilon"] = f.epsilon;
  j["delta"] = f.delta;
  j["params"] = f.params_mode;
  j["k1"] = f.k1;
  j["k2"] = f.k2;
  j["eta"] = f.eta;
  j["c"] = f.c;
  j["seed"] = f.seed;
  j["trials"] = f.trials;
  j["out"] = f.out;
  j["mode"] = f.mode;
  j["per_step"] = f.per_step;
  return j;
}

int cmd_ldim(const std::string& class_spec, std::ostream& out) {
  HypothesisClass cls = HypothesisClass::from_spec(class_spec);
  out << cls.ldim() << '\n';
  return 0;
}

int cmd_params(int d, int64_t T, double epsilon, double delta,
               std::ostream& out) {
  TheoryParams tp = theory_params(d, T, epsilon, delta);
  out << "k1 " << tp.k1 << '\n';
  out << "eta " << tp.eta << '\n';
  out << "c " << tp.c << '\n';
  out << "k2 " << tp.k2 << '\n';
  return 0;
}

int cmd_soa_run(const RunFlags& f, std::ostream&) {
  HypothesisClass cls = HypothesisClass::from_spec(f.class_spec);
  auto adv = build_adaptive_adversary(f.adversary, cls, f.seed);
  Rng rng(f.seed, /*stream=*/3);
  SoaState state(cls);
  std::vector<Predictor> published;
  std::ofstream csv = open_out(f.out);
  csv << "t,x,y,yhat,mistake\n";
  for (uint32_t t = 1; t <= f.T; ++t) {
    published.emplace_back(state.fingerprint());
    LabeledExample ex = adv->next_example(published, rng);
    bool yhat = state.predict(ex.x);
    csv << t << ',' << ex.x << ',' << int(ex.y) << ',' << int(yhat) << ','
        << int(yhat != ex.y) << '\n';
    state.update(ex);
  }
  json j;
  j["subcommand"] = "soa-run";
  j["class"] = f.class_spec;
  j["adversary"] = f.adversary;
  j["T"] = f.T;
  j["seed"] = f.seed;
  j["out"] = f.out;
  write_sidecar(f.out, j);
  return 0;
}

int cmd_dpsoa_run(const RunFlags& f, std::ostream&) {
  HypothesisClass cls = HypothesisClass::from_spec(f.class_spec);
  if (f.mode != "histsparse" && f.mode != "hist")
    throw CLI::ValidationError("--mode", "must be histsparse or hist");
  resolve_algorithm_params(f, cls, /*need_c=*/f.mode == "histsparse");
  if (f.adversary != "fixed-target")
    throw std::runtime_error(
        "dpsoa-run is the oblivious runner; only fixed-target streams apply");
  DpSoaParams params;
  params.epsilon = f.epsilon;
  params.delta = f.delta;
  params.k1 = f.k1;
  params.k2 = f.k2;
  params.eta = f.eta;
  params.c = f.mode == "histsparse" ? f.c : 1;
  params.mode = f.mode == "hist" ? PublishMode::kPerStepHist
                                 : PublishMode::kHistSparse;

  std::vector<RunRecord> records;
  for (uint32_t trial = 0; trial < f.trials; ++trial) {
    uint64_t seed = f.trials == 1 ? f.seed : derive_seed(f.seed, trial);
    auto seq = realizable_stream(cls, f.T, seed);
    records.push_back(run_oblivious(cls, seq, params, seed));
  }
  std::ofstream csv = open_out(f.out);
  if (records.size() == 1) {
    write_csv(records[0], csv);
  } else {
    write_summary_csv(summarize(records), csv);
  }
  write_sidecar(f.out, run_flags_json("dpsoa-run", f));
  return 0;
}

int cmd_adaptive_run(const RunFlags& f, std::ostream&) {
  HypothesisClass cls = HypothesisClass::from_spec(f.class_spec);
  resolve_algorithm_params(f, cls, /*need_c=*/false);
  AdaptiveBudget budget;
  budget.epsilon = f.epsilon;
  budget.delta = f.delta;
  budget.per_step = f.per_step;

  std::vector<RunRecord> records;
  for (uint32_t trial = 0; trial < f.trials; ++trial) {
    uint64_t seed = f.trials == 1 ? f.seed : derive_seed(f.seed, trial);
    auto adv = build_adaptive_adversary(f.adversary, cls, seed);
    records.push_back(
        run_adaptive(cls, *adv, budget, f.T, f.k1, f.k2, f.eta, seed));
  }
  std::ofstream csv = open_out(f.out);
  if (records.size() == 1) {
    write_csv(records[0], csv);
  } else {
    write_summary_csv(summarize(records), csv);
  }
  write_sidecar(f.out, run_flags_json("adaptive-run", f));
  return 0;
}

// Synthetic drifting list stream: a heavy element fades into a second one
// and back, with the heavier of the two always at frequency >= 1/2.
int cmd_hist_demo(size_t k, uint32_t T, double epsilon, double delta,
                  double eta, int64_t c, uint64_t seed, const std::string& out,
                  std::ostream&) {
  uint32_t n = 8;
  BitVec f0(n), f1(n);
  f1.set(0, true);
  HypList list(k, Predictor(f0));
  auto set_mix = [&](double frac1) {
    size_t ones = size_t(frac1 * double(k) + 0.5);
    for (size_t i = 0; i < k; ++i)
      list[i] = (i < ones) ? Predictor(f1) : Predictor(f0);
  };

  SparseParams params(epsilon, delta, eta, c, k, 1.0 / double(T));
  Rng rng(seed, /*stream=*/2);
  std::ofstream csv = open_out(out);
  csv << "t,query,response,counter,freq_current,released\n";
  HistSparse sparse(params, list, rng);
  {
    csv << 1 << ",0,init," << sparse.counter() << ','
        << freq(list, sparse.current()).value() << ",1\n";
  }
  for (uint32_t t = 2; t <= T; ++t) {
    double phase = double(t) / double(T);
    double frac1 = phase < 0.3 ? 0.0
                   : phase < 0.5 ? (phase - 0.3) / 0.2
                                 : 1.0;
    set_mix(frac1);
    if (sparse.aborted()) break;
    double query = 1.0 - freq(list, sparse.current()).value();
    Predictor h = sparse.step(list, rng);
    csv << t << ',' << query << ','
        << (sparse.last_step_released() ? "top" : "bottom") << ','
        << sparse.counter() << ',' << freq(list, h).value() << ','
        << int(sparse.last_step_released()) << '\n';
  }
  json j;
  j["subcommand"] = "hist-demo";
  j["k"] = k;
  j["T"] = T;
  j["epsilon"] = epsilon;
  j["delta"] = delta;
  j["eta"] = eta;
  j["c"] = c;
  j["seed"] = seed;
  j["out"] = out;
  write_sidecar(out, j);
  return 0;
}

int cmd_audit(const std::string& mechanism, const std::string& neighbors,
              double epsilon, double delta, uint64_t N, int64_t c,
              uint64_t seed, const std::string& out, std::ostream& console) {
  AuditReport report = audit(mechanism, neighbors, epsilon, delta, N, seed, c);
  console << "audit " << mechanism << " (" << neighbors
          << "): epsilon_hat = " << report.epsilon_hat
          << ", budget = " << (neighbors == "identical" ? 0.0 : epsilon)
          << ", slack = " << report.slack << " -> "
          << (report.pass ? "PASS" : "FAIL") << '\n';
  if (!out.empty()) {
    std::ofstream csv = open_out(out);
    write_audit_csv(report, csv);
    json j;
    j["subcommand"] = "audit";
    j["mechanism"] = mechanism;
    j["neighbors"] = neighbors;
    j["epsilon"] = epsilon;
    j["delta"] = delta;
    j["N"] = N;
    j["c"] = c;
    j["seed"] = seed;
    j["out"] = out;
    write_sidecar(out, j);
  }
  return 0;
}

}  // namespace

int cli(const std::vector<std::string>& args, std::ostream& out,
        std::ostream& err) {
  CLI::App app{"differentially private online classification harness"};
  app.require_subcommand(1);

  auto* ldim_cmd = app.add_subcommand("ldim", "Littlestone dimension of a class");
  std::string ldim_class;
  ldim_cmd->add_option("--class", ldim_class, "class generator or file path")
      ->required();

  auto* params_cmd =
      app.add_subcommand("params", "analysis parameter values, exact");
  int pd = 0;
  int64_t pt = 1000;
  double pe = 1.0, pdl = 0.01;
  params_cmd->add_option("--d", pd, "Littlestone dimension")->required();
  params_cmd->add_option("--T", pt, "horizon");
  params_cmd->add_option("--epsilon", pe, "epsilon");
  params_cmd->add_option("--delta", pdl, "delta");

  RunFlags soa_flags;
  auto* soa_cmd = app.add_subcommand("soa-run", "non-private SOA baseline");
  soa_cmd->add_option("--class", soa_flags.class_spec, "class spec")->required();
  soa_cmd->add_option("--adversary", soa_flags.adversary,
                      "fixed-target|disagree|mistake-tree");
  soa_cmd->add_option("--T", soa_flags.T, "rounds");
  soa_cmd->add_option("--seed", soa_flags.seed, "seed");
  soa_cmd->add_option("--out", soa_flags.out, "output CSV")->required();

  RunFlags dpsoa_flags;
  auto* dpsoa_cmd = app.add_subcommand("dpsoa-run", "oblivious private runner");
  add_common_run_flags(dpsoa_cmd, dpsoa_flags);
  dpsoa_cmd->add_option("--adversary", dpsoa_flags.adversary,
                        "stream generator (fixed-target)");
  dpsoa_cmd->add_option("--mode", dpsoa_flags.mode,
                        "publisher: histsparse|hist");

  RunFlags adaptive_flags;
  auto* adaptive_cmd =
      app.add_subcommand("adaptive-run", "adaptive-adversary runner");
  add_common_run_flags(adaptive_cmd, adaptive_flags);
  adaptive_cmd->add_option("--adversary", adaptive_flags.adversary,
                           "fixed-target|disagree|mistake-tree");
  adaptive_cmd->add_flag("--per-step", adaptive_flags.per_step,
                         "treat (epsilon, delta) as the per-round budget");

  auto* hist_cmd =
      app.add_subcommand("hist-demo", "sparse publisher on a drifting stream");
  size_t hk = 2000;
  uint32_t ht = 200;
  double he = 1.0, hd = 0.01, heta = 0.5;
  int64_t hc = 4;
  uint64_t hseed = 1;
  std::string hout;
  hist_cmd->add_option("--k", hk, "list length");
  hist_cmd->add_option("--T", ht, "rounds");
  hist_cmd->add_option("--epsilon", he, "epsilon");
  hist_cmd->add_option("--delta", hd, "delta");
  hist_cmd->add_option("--eta", heta, "eta");
  hist_cmd->add_option("--c", hc, "crossing budget");
  hist_cmd->add_option("--seed", hseed, "seed");
  hist_cmd->add_option("--out", hout, "output CSV")->required();

  auto* audit_cmd = app.add_subcommand("audit", "empirical privacy audit");
  std::string am, an = "canonical", aout;
  double ae = 1.0, ad = 0.01;
  uint64_t aN = 100000, aseed = 1;
  int64_t ac = 2;
  audit_cmd
      ->add_option("--mechanism", am,
                   "laplace-count|stable-histogram|above-threshold-stream")
      ->required();
  audit_cmd->add_option("--neighbors", an, "canonical|identical");
  audit_cmd->add_option("--epsilon", ae, "epsilon budget");
  audit_cmd->add_option("--delta", ad, "delta budget");
  audit_cmd->add_option("--N", aN, "trials per side");
  audit_cmd->add_option("--c", ac, "above-threshold crossing budget");
  audit_cmd->add_option("--seed", aseed, "seed");
  audit_cmd->add_option("--out", aout, "bucket CSV path");

  std::vector<const char*> argv;
  argv.push_back("dpsoa");
  for (const std::string& a : args) argv.push_back(a.c_str());

  try {
    app.parse(int(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  try {
    if (ldim_cmd->parsed()) return cmd_ldim(ldim_class, out);
    if (params_cmd->parsed()) return cmd_params(pd, pt, pe, pdl, out);
    if (soa_cmd->parsed()) return cmd_soa_run(soa_flags, out);
    if (dpsoa_cmd->parsed()) return cmd_dpsoa_run(dpsoa_flags, out);
    if (adaptive_cmd->parsed()) return cmd_adaptive_run(adaptive_flags, out);
    if (hist_cmd->parsed())
      return cmd_hist_demo(hk, ht, he, hd, heta, hc, hseed, hout, out);
    if (audit_cmd->parsed())
      return cmd_audit(am, an, ae, ad, aN, ac, aseed, aout, out);
  } catch (const CLI::Error& e) {
    err << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}

int cli(int argc, char** argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return cli(args, std::cout, std::cerr);
}

}  // namespace dpsoa
