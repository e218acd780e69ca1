// Copyright 2026 The Inoculation Harness Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Acceptance runner: one PASS/FAIL line per criterion, nonzero exit if any
// criterion fails.
//
//   acceptance --cli path/to/inoc [--only 1,4,5] [--jobs N]
//
// `--subsample-dump FILE` is an internal mode used to compare subsampling
// output across processes.

#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "gradient_check.hpp"
#include "inoc/inoculation.hpp"
#include "inoc/perturb.hpp"
#include "inoc/report.hpp"
#include "inoc/synthgen.hpp"
#include "inoc/text.hpp"
#include "schedule_fixtures.hpp"
#include "test_util.hpp"

namespace {

using namespace inoc;
using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string fmt(double v, int digits = 4) {
  std::ostringstream s;
  s.setf(std::ios::fixed);
  s.precision(digits);
  s << v;
  return s.str();
}

// ------------------------------------------------------------------ 1

Verdict baseline_counts() {
  const auto t0 = Clock::now();
  const BaselineStats s = run_baseline(gen_numeric(NumericCategoryCounts{}, 17));
  const double secs = seconds_since(t0);
  const std::size_t bp = s.total_correct() * 10000 / s.total();
  std::ostringstream d;
  d << s.total_correct() << "/" << s.total() << " (" << bp / 100 << "." << (bp % 100 < 10 ? "0" : "")
    << bp % 100 << "%), rules " << s.correct[0] << "/" << s.correct[1] << "/" << s.correct[2]
    << " correct, " << s.wrong[0] << "/" << s.wrong[1] << "/" << s.wrong[2] << " wrong, "
    << fmt(secs, 2) << " s";
  const bool ok = s.total_correct() == 6233 && s.total() == 7596 && bp == 8205 &&
                  s.correct == std::array<std::size_t, 3>{1235, 2532, 2466} &&
                  s.wrong == std::array<std::size_t, 3>{0, 132, 1231} && secs < 5.0;
  return {ok, d.str()};
}

// -------------------------------------------------------------- 2 / 3

TrainConfig pretrain_config() {
  TrainConfig tc;
  tc.initial_lr = 0.2;
  tc.l2 = 1e-3;
  return tc;
}

DatasetBundle challenge_of(const DatasetBundle& original, TransformKind kind) {
  return make_challenge_bundle(original, Transformation{kind, 5}, 1000, 3);
}

double max_closure(const InoculationReport& r) {
  double m = -std::numeric_limits<double>::infinity();
  for (const InoculationPoint& p : r.points) m = std::max(m, gap_closure(r, p));
  return m;
}

std::string describe(const InoculationReport& r) {
  std::ostringstream d;
  d << r.challenge_name << ": pre " << fmt(r.pre_original_acc) << "/" << fmt(r.pre_challenge_acc)
    << ", outcome " << (r.outcome ? std::string(outcome_name(r.outcome->kind)) : "undefined");
  if (r.outcome) {
    d << " (closure " << fmt(r.outcome->evidence.max_gap_closure) << " at "
      << r.outcome->evidence.at_size << ", max drop " << fmt(r.outcome->evidence.max_original_drop)
      << ")";
  }
  return d.str();
}

InoculationReport sweep(const Checkpoint& base, const DatasetBundle& original,
                        const DatasetBundle& challenge, const std::string& name, std::size_t jobs) {
  SweepOptions o;
  o.jobs = jobs;
  o.challenge_name = name;
  return run_protocol(base, original, challenge, FineTunePlan{}, o);
}

Verdict dataset_weakness(std::size_t jobs) {
  const auto t0 = Clock::now();
  const DatasetBundle original = gen_original(SynthConfig{});
  const Checkpoint base = train(pretrain_config(), FeatureConfig{}, original.train, original.dev);
  const double pre = evaluate(base, original.test);
  bool ok = original.train.size() >= 20000 && pre >= 0.85;
  std::string detail = "original test " + fmt(pre);
  for (TransformKind k : {TransformKind::kWordOverlap, TransformKind::kNegation}) {
    const std::string name(transform_name(k));
    const InoculationReport r = sweep(base, original, challenge_of(original, k), name, jobs);
    bool point = false;
    for (const InoculationPoint& p : r.points) {
      point = point || (p.size <= 250 && gap_closure(r, p) >= 0.80 && original_drop(r, p) <= 0.02);
    }
    ok = ok && performance_gap(r) >= 0.15 && point && r.outcome &&
         r.outcome->kind == OutcomeKind::kDatasetWeakness;
    detail += "; " + describe(r) + (point ? "" : ", no qualifying size <= 250");
  }
  const double secs = seconds_since(t0);
  ok = ok && (jobs != 1 || secs < 600.0);
  detail += "; " + fmt(secs, 1) + " s with " + std::to_string(jobs) + " job(s)";
  return {ok, detail};
}

Verdict model_weakness_and_shift(std::size_t jobs) {
  const DatasetBundle original = gen_original(SynthConfig{});
  const Checkpoint words = train(pretrain_config(), FeatureConfig{}, original.train, original.dev);
  FeatureConfig with_chars;
  with_chars.use_char_ngrams = true;
  const Checkpoint chars = train(pretrain_config(), with_chars, original.train, original.dev);

  const DatasetBundle spelling = challenge_of(original, TransformKind::kSpellingError);
  const InoculationReport off = sweep(words, original, spelling, "spelling_error", jobs);
  const InoculationReport on = sweep(chars, original, spelling, "spelling_error+char", jobs);
  bool drops = true;
  for (const InoculationPoint& p : off.points) drops = drops && original_drop(off, p) <= 0.02;
  const bool off_gap = performance_gap(off) > 0.0;
  const bool on_gap = performance_gap(on) > 0.0;
  const bool a = off_gap && on_gap && off.outcome &&
                 off.outcome->kind == OutcomeKind::kModelWeakness && max_closure(off) < 0.30 &&
                 drops && max_closure(on) > max_closure(off);

  SynthConfig skewed;
  skewed.counts = {1000, 500, 2000};
  skewed.seed = 99;
  const InoculationReport single =
      sweep(words, original, gen_single_label(skewed, Label::kContradiction),
            "single_label_contradiction", jobs);
  const bool b = single.outcome && single.outcome->kind == OutcomeKind::kDistributionShift &&
                 single.outcome->evidence.max_original_drop > 0.05;

  std::string detail = "(a) " + std::string(a ? "ok" : "failed") + ": " + describe(off) +
                       ", max closure " + (off_gap ? fmt(max_closure(off)) : "n/a") +
                       " vs chars on " + (on_gap ? fmt(max_closure(on)) : "n/a") +
                       "; (b) " + (b ? "ok" : "failed") + ": " + describe(single);
  return {a && b, detail};
}

// ------------------------------------------------------------------ 4

Verdict gradients() {
  double worst = 0.0;
  for (std::uint64_t s = 0; s < 20; ++s) worst = std::max(worst, inoc_test::max_relative_error(0, s));
  std::ostringstream d;
  d << "20 settings x 10 coordinates, worst relative error " << std::scientific
    << std::setprecision(2) << worst;
  return {worst < 1e-5, d.str()};
}

// ------------------------------------------------------------------ 5

Verdict schedules() {
  const auto fixtures = inoc_test::schedule_fixtures();
  std::string failures;
  for (const auto& fx : fixtures) {
    const std::string err = inoc_test::check_schedule(fx);
    if (!err.empty()) failures += (failures.empty() ? "" : "; ") + err;
  }
  return {failures.empty() && fixtures.size() == 10,
          std::to_string(fixtures.size()) + " fixtures" + (failures.empty() ? "" : ": " + failures)};
}

// ------------------------------------------------------------------ 6

struct SubsampleCase {
  std::uint64_t seed;
  std::vector<std::size_t> sizes;
};

std::vector<SubsampleCase> subsample_cases() {
  std::mt19937_64 gen(2026);
  std::vector<SubsampleCase> cases;
  for (int i = 0; i < 100; ++i) {
    SubsampleCase c;
    c.seed = gen();
    std::set<std::size_t> sizes;
    const std::size_t k = 1 + gen() % 8;
    while (sizes.size() < k) sizes.insert(1 + gen() % 400);
    c.sizes.assign(sizes.begin(), sizes.end());
    cases.push_back(std::move(c));
  }
  return cases;
}

DatasetSplit subsample_pool() {
  SynthConfig c;
  c.counts = {400, 0, 0};
  c.seed = 8;
  return gen_original(c).train;
}

// Every case, every subset, one line of ids each.
std::string subsample_dump() {
  const DatasetSplit pool = subsample_pool();
  std::ostringstream out;
  for (const SubsampleCase& c : subsample_cases()) {
    for (const DatasetSplit& s : subsample_inclusive(pool, c.sizes, c.seed)) {
      out << c.seed << ":" << s.size();
      for (const Example& e : s.examples) out << ' ' << e.id;
      out << '\n';
    }
  }
  return out.str();
}

Verdict subsampling(const std::string& self) {
  const DatasetSplit pool = subsample_pool();
  std::size_t nest_failures = 0;
  for (const SubsampleCase& c : subsample_cases()) {
    const auto subs = subsample_inclusive(pool, c.sizes, c.seed);
    for (std::size_t i = 0; i < subs.size(); ++i) {
      std::set<std::string> ids;
      for (const Example& e : subs[i].examples) ids.insert(e.id);
      bool ok = subs[i].size() == c.sizes[i] && ids.size() == c.sizes[i];
      if (i + 1 < subs.size()) {
        std::set<std::string> larger;
        for (const Example& e : subs[i + 1].examples) larger.insert(e.id);
        ok = ok && std::includes(larger.begin(), larger.end(), ids.begin(), ids.end());
      }
      nest_failures += !ok;
    }
  }
  inoc_test::TempDir dir("inoc_accept");
  std::string dumps[2];
  for (int i = 0; i < 2; ++i) {
    const std::string file = dir / ("dump" + std::to_string(i));
    const auto r = inoc_test::run_command(inoc_test::quote(self) + " --subsample-dump " +
                                          inoc_test::quote(file));
    if (r.exit_code != 0) return {false, "helper process failed: " + r.output};
    dumps[i] = inoc_test::read_file(file);
  }
  const bool same = !dumps[0].empty() && dumps[0] == dumps[1] && dumps[0] == subsample_dump();
  return {nest_failures == 0 && same,
          "100 cases, " + std::to_string(nest_failures) + " nesting failures, cross-process output " +
              (same ? "identical" : "differs")};
}

// ------------------------------------------------------------------ 7

Verdict perturbations() {
  SynthConfig c;
  c.counts = {1000, 0, 0};
  c.seed = 21;
  const DatasetSplit src = gen_original(c).train;
  std::size_t label = 0, suffix = 0, spelling = 0, distractor = 0;
  const std::string t = " and true is true";
  for (const Example& e : src.examples) {
    for (TransformKind k : kAllTransformKinds) {
      const Example out = apply(Transformation{k, 5}, e);
      label += out.label != e.label;
    }
    const Example w = apply(Transformation{TransformKind::kWordOverlap}, e);
    const Example n = apply(Transformation{TransformKind::kNegation}, e);
    const Example l = apply(Transformation{TransformKind::kLengthMismatch}, e);
    suffix += !(w.hypothesis == e.hypothesis + t && w.premise == e.premise);
    suffix += !(n.hypothesis == e.hypothesis + " and false is not true" && n.premise == e.premise);
    suffix += !(l.premise == e.premise + t + t + t + t + t && l.hypothesis == e.hypothesis);

    const Example s = apply(Transformation{TransformKind::kSpellingError, 5}, e);
    spelling += !(s.premise == e.premise &&
                  inoc_test::damerau_levenshtein(e.hypothesis, s.hypothesis) == 1);

    // The original passage is a prefix, followed by exactly one sentence.
    const Example d = apply(Transformation{TransformKind::kDistractor, 5}, e);
    bool ok = d.hypothesis == e.hypothesis && d.premise.rfind(e.premise, 0) == 0;
    if (ok) {
      std::string rest = d.premise.substr(e.premise.size());
      if (!rest.empty() && rest.front() == '.') rest.erase(0, 1);
      ok = rest.size() > 2 && rest.front() == ' ' && rest.back() == '.' &&
           rest.find_first_of(".!?") == rest.size() - 1;
    }
    distractor += !ok;
  }
  const std::size_t bad = label + suffix + spelling + distractor;
  return {bad == 0 && src.size() == 1000,
          std::to_string(src.size()) + " examples; violations: label " + std::to_string(label) +
              ", suffix " + std::to_string(suffix) + ", spelling " + std::to_string(spelling) +
              ", distractor " + std::to_string(distractor)};
}

// ------------------------------------------------------------------ 8

Verdict end_to_end(const std::string& cli) {
  namespace fs = std::filesystem;
  std::string reports[2];
  for (int run = 0; run < 2; ++run) {
    inoc_test::TempDir dir("inoc_e2e");
    const std::string c = inoc_test::quote(cli);
    const std::vector<std::string> steps = {
        c + " gen --kind original --train 2000 --dev 500 --test 500 --seed 13 --out " +
            inoc_test::quote(dir / "orig"),
        c + " challenge --source " + inoc_test::quote(dir / "orig") +
            " --transform negation --train-size 250 --seed 5 --out " +
            inoc_test::quote(dir / "negation"),
        c + " train --data " + inoc_test::quote(dir / "orig") +
            " --epochs 5 --lr 0.2 --l2 0.001 --seed 7 --out " + inoc_test::quote(dir / "m.ckpt"),
        c + " inoculate --checkpoint " + inoc_test::quote(dir / "m.ckpt") + " --original " +
            inoc_test::quote(dir / "orig") + " --challenge " + inoc_test::quote(dir / "negation") +
            " --sizes 10,50,250 --lrs 0.001,0.01 --epochs 5 --seed 3 --jobs 2 --out " +
            inoc_test::quote(dir / "out"),
    };
    for (const std::string& s : steps) {
      const auto r = inoc_test::run_command(s);
      if (r.exit_code != 0) return {false, "step failed: " + s + "\n" + r.output};
    }
    for (const auto& e : fs::directory_iterator(dir.path() / "out")) {
      if (e.is_directory()) reports[run] = inoc_test::read_file(e.path() / "report.json");
    }
  }
  const bool same = !reports[0].empty() && reports[0] == reports[1];
  return {same, "report.json " + std::to_string(reports[0].size()) + " bytes, " +
                    (same ? "byte-identical" : "differs") + " across two runs"};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria"};
  std::string cli;
  std::string dump;
  std::vector<int> only;
  std::size_t jobs = 1;
  app.add_option("--cli", cli, "Path to the inoc binary");
  app.add_option("--only", only, "Run only these criteria")->delimiter(',');
  app.add_option("--jobs", jobs,
                 "Worker threads for criterion 3, 0 = logical cores (criterion 2 always uses 1)");
  app.add_option("--subsample-dump", dump, "Internal: write subsampling output to a file");
  CLI11_PARSE(app, argc, argv);

  if (!dump.empty()) {
    std::ofstream(dump, std::ios::binary) << subsample_dump();
    return 0;
  }
  if (jobs == 0) jobs = std::max(1u, std::thread::hardware_concurrency());
  const std::string self = std::filesystem::canonical("/proc/self/exe").string();

  const std::vector<std::pair<int, std::function<Verdict()>>> criteria = {
      {1, baseline_counts},
      {2, [] { return dataset_weakness(1); }},
      {3, [&] { return model_weakness_and_shift(jobs); }},
      {4, gradients},
      {5, schedules},
      {6, [&] { return subsampling(self); }},
      {7, perturbations},
      {8, [&]() -> Verdict {
         if (cli.empty()) return {false, "--cli not given"};
         return end_to_end(cli);
       }},
  };
  int failed = 0;
  for (const auto& [id, run] : criteria) {
    if (!only.empty() && std::find(only.begin(), only.end(), id) == only.end()) continue;
    Verdict v;
    try {
      v = run();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    failed += !v.pass;
    std::cout << "criterion " << id << ": " << (v.pass ? "PASS" : "FAIL") << " - " << v.detail
              << std::endl;
  }
  return failed == 0 ? 0 : 1;
}
