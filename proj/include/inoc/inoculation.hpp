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

// The size x learning-rate fine-tuning sweep.

#pragma once

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "inoc/checkpoint.hpp"
#include "inoc/corpus.hpp"
#include "inoc/errors.hpp"
#include "inoc/outcomes.hpp"
#include "inoc/report_types.hpp"
#include "inoc/rng.hpp"
#include "inoc/trainer.hpp"
#include "json.hpp"

namespace inoc {

struct FineTunePlan {
  std::vector<std::size_t> sizes = {5, 10, 25, 50, 100, 250, 500, 750, 1000};
  std::vector<double> lr_grid = {1e-6, 1e-5, 1e-4, 4e-4, 1e-3, 1e-2};
  std::size_t patience = 5;
  std::uint64_t seed = 11;
  // Per-run optimizer settings; the learning rate comes from lr_grid.
  std::size_t batch_size = 32;
  std::size_t max_epochs = 30;
  bool lr_halving = true;
  double l2 = 1e-6;

  void validate() const {
    if (lr_grid.empty()) throw ConfigError("lr_grid must not be empty");
    for (double lr : lr_grid) {
      if (!(lr > 0.0) || !std::isfinite(lr)) throw ConfigError("lr_grid entries must be positive");
    }
    for (std::size_t i = 1; i < sizes.size(); ++i) {
      if (sizes[i] <= sizes[i - 1]) throw ConfigError("plan sizes must be strictly ascending");
    }
    if (patience == 0) throw ConfigError("patience must be at least 1");
    if (batch_size == 0) throw ConfigError("batch_size must be positive");
    if (l2 < 0.0 || !std::isfinite(l2)) throw ConfigError("l2 must be nonnegative");
  }

  TrainConfig train_config(double lr, std::size_t size) const {
    TrainConfig c;
    c.initial_lr = lr;
    c.batch_size = batch_size;
    c.max_epochs = max_epochs;
    c.patience = patience;
    c.lr_halving = lr_halving;
    c.l2 = l2;
    c.seed = derive_seed(seed, "tune/" + std::to_string(size));
    return c;
  }
};

struct SweepOptions {
  std::size_t jobs = 1;
  // When set, per-run logs are written below this directory.
  std::optional<std::filesystem::path> run_dir;
  OutcomeThresholds thresholds;
  std::string challenge_name = "challenge";
};

// Stable short spelling of a learning rate for file names: 1e-06, 0.0004.
inline std::string lr_tag(double lr) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", lr);
  return buf;
}

inline std::string run_log_ref(std::size_t size, double lr) {
  return "runs/size_" + std::to_string(size) + "_lr_" + lr_tag(lr) + ".jsonl";
}

namespace detail {

// Runs job(i) for i in [0, n) on up to `jobs` threads. The first exception
// thrown by any job is rethrown after all threads finish.
template <typename Job>
void parallel_for(std::size_t n, std::size_t jobs, const Job& job) {
  jobs = std::max<std::size_t>(1, std::min(jobs, n));
  if (jobs == 1) {
    for (std::size_t i = 0; i < n; ++i) job(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  std::mutex error_mu;
  auto worker = [&] {
    for (;;) {
      if (failed.load()) return;
      const std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      try {
        job(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mu);
        if (!error) error = std::current_exception();
        failed.store(true);
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(jobs);
  for (std::size_t t = 0; t < jobs; ++t) pool.emplace_back(worker);
  for (std::thread& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

// Index of the maximum; ties go to the earliest entry.
inline std::size_t first_argmax(const std::vector<double>& v) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (v[i] > v[best]) best = i;
  }
  return best;
}

}  // namespace detail

inline InoculationReport run_protocol(const Checkpoint& base, const DatasetBundle& original,
                                      const DatasetBundle& challenge, const FineTunePlan& plan,
                                      const SweepOptions& options = {}) {
  plan.validate();
  options.thresholds.validate();
  base.params.check_shape();
  if (original.dev.empty() || original.test.empty()) {
    throw DataError("original bundle needs non-empty dev and test splits");
  }
  if (challenge.test.empty()) throw DataError("challenge bundle has an empty test split");
  if (!plan.sizes.empty() && plan.sizes.back() > challenge.train.size()) {
    throw DataError("challenge train has " + std::to_string(challenge.train.size()) +
                    " examples but the plan needs " + std::to_string(plan.sizes.back()));
  }

  const FeatureConfig& f = base.params.features;
  const FeaturizedSplit original_dev = featurize_split(original.dev, f);
  const FeaturizedSplit original_test = featurize_split(original.test, f);
  const FeaturizedSplit challenge_test = featurize_split(challenge.test, f);
  std::optional<FeaturizedSplit> challenge_dev;
  if (!challenge.dev.empty()) challenge_dev = featurize_split(challenge.dev, f);

  InoculationReport report;
  report.challenge_name = options.challenge_name;
  report.pre_original_acc = accuracy(base.params, original_test);
  report.pre_challenge_acc = accuracy(base.params, challenge_test);
  const std::optional<double> pre_challenge_dev =
      challenge_dev ? std::optional<double>(accuracy(base.params, *challenge_dev)) : std::nullopt;

  const std::vector<DatasetSplit> subsets =
      subsample_inclusive(challenge.train, plan.sizes, plan.seed);
  std::vector<FeaturizedSplit> subset_vecs;
  subset_vecs.reserve(subsets.size());
  for (const DatasetSplit& s : subsets) subset_vecs.push_back(featurize_split(s, f));

  if (options.run_dir) std::filesystem::create_directories(*options.run_dir / "runs");

  const std::size_t n_lr = plan.lr_grid.size();
  report.runs.resize(plan.sizes.size() * n_lr);
  detail::parallel_for(report.runs.size(), options.jobs, [&](std::size_t job) {
    const std::size_t si = job / n_lr;
    const std::size_t li = job % n_lr;
    RunRecord& run = report.runs[job];
    run.size = plan.sizes[si];
    run.lr = plan.lr_grid[li];
    run.history_ref = run_log_ref(run.size, run.lr);

    Checkpoint tuned;
    if (run.size == 0) {
      run.original_test_acc = report.pre_original_acc;
      run.challenge_test_acc = report.pre_challenge_acc;
      run.challenge_dev_acc = pre_challenge_dev;
    } else {
      tuned = fine_tune(base, subset_vecs[si], original_dev, plan.train_config(run.lr, run.size));
      run.epochs = tuned.history.size();
      // optimize keeps the first epoch reaching the best dev metric.
      double best = 0.0;
      for (const EpochRecord& r : tuned.history) {
        if (run.selected_epoch == 0 ||
            r.dev_accuracy > best + PlateauSchedule::kImprovementEpsilon) {
          best = r.dev_accuracy;
          run.selected_epoch = r.epoch;
        }
      }
      run.original_test_acc = accuracy(tuned.params, original_test);
      run.challenge_test_acc = accuracy(tuned.params, challenge_test);
      if (challenge_dev) run.challenge_dev_acc = accuracy(tuned.params, *challenge_dev);
    }

    if (options.run_dir) {
      const std::filesystem::path path = *options.run_dir / run.history_ref;
      std::ofstream out(path, std::ios::trunc);
      if (!out) throw RuntimeError("cannot write run log '" + path.string() + "'");
      write_history_jsonl(tuned.history, out);
      nlohmann::ordered_json summary;
      summary["summary"] = true;
      summary["size"] = run.size;
      summary["lr"] = run.lr;
      summary["selected_epoch"] = run.selected_epoch;
      summary["original_test_acc"] = run.original_test_acc;
      summary["challenge_test_acc"] = run.challenge_test_acc;
      if (run.challenge_dev_acc) {
        summary["challenge_dev_acc"] = *run.challenge_dev_acc;
      } else {
        summary["challenge_dev_acc"] = nullptr;
      }
      out << summary.dump() << '\n';
      if (!out) throw RuntimeError("write to '" + path.string() + "' failed");
    }
  });

  for (std::size_t si = 0; si < plan.sizes.size(); ++si) {
    std::vector<double> test_acc(n_lr);
    std::vector<double> dev_acc(n_lr);
    for (std::size_t li = 0; li < n_lr; ++li) {
      const RunRecord& run = report.runs[si * n_lr + li];
      test_acc[li] = run.challenge_test_acc;
      dev_acc[li] = run.challenge_dev_acc.value_or(0.0);
    }
    const RunRecord& chosen = report.runs[si * n_lr + detail::first_argmax(test_acc)];
    InoculationPoint point;
    point.size = chosen.size;
    point.best_lr = chosen.lr;
    point.original_test_acc = chosen.original_test_acc;
    point.challenge_test_acc = chosen.challenge_test_acc;
    point.history_ref = chosen.history_ref;
    if (challenge_dev) {
      const RunRecord& by_dev = report.runs[si * n_lr + detail::first_argmax(dev_acc)];
      point.dev_selected = DevSelection{by_dev.lr, by_dev.original_test_acc,
                                        by_dev.challenge_test_acc};
    }
    report.points.push_back(std::move(point));
  }

  if (performance_gap(report) > 0.0) report.outcome = classify(report, options.thresholds);
  return report;
}

inline FineTunePlan fine_tune_plan_from_json(const nlohmann::json& j, FineTunePlan plan = {}) {
  if (!j.is_object()) throw ConfigError("fine-tune plan must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    try {
      if (key == "sizes") plan.sizes = value.get<std::vector<std::size_t>>();
      else if (key == "lr_grid") plan.lr_grid = value.get<std::vector<double>>();
      else if (key == "patience") plan.patience = value.get<std::size_t>();
      else if (key == "seed") plan.seed = value.get<std::uint64_t>();
      else if (key == "batch_size") plan.batch_size = value.get<std::size_t>();
      else if (key == "max_epochs") plan.max_epochs = value.get<std::size_t>();
      else if (key == "lr_halving") plan.lr_halving = value.get<bool>();
      else if (key == "l2") plan.l2 = value.get<double>();
      else throw ConfigError("unknown key '" + key + "' in fine-tune plan");
    } catch (const nlohmann::json::exception&) {
      throw ConfigError("bad value for '" + key + "' in fine-tune plan");
    }
  }
  plan.validate();
  return plan;
}

inline nlohmann::ordered_json fine_tune_plan_to_json(const FineTunePlan& p) {
  nlohmann::ordered_json j;
  j["sizes"] = p.sizes;
  j["lr_grid"] = p.lr_grid;
  j["patience"] = p.patience;
  j["seed"] = p.seed;
  j["batch_size"] = p.batch_size;
  j["max_epochs"] = p.max_epochs;
  j["lr_halving"] = p.lr_halving;
  j["l2"] = p.l2;
  return j;
}

inline OutcomeThresholds thresholds_from_json(const nlohmann::json& j, OutcomeThresholds th = {}) {
  if (!j.is_object()) throw ConfigError("thresholds must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    try {
      if (key == "close_frac") th.close_frac = value.get<double>();
      else if (key == "unchanged_frac") th.unchanged_frac = value.get<double>();
      else if (key == "damage_drop") th.damage_drop = value.get<double>();
      else throw ConfigError("unknown key '" + key + "' in thresholds");
    } catch (const nlohmann::json::exception&) {
      throw ConfigError("bad value for '" + key + "' in thresholds");
    }
  }
  th.validate();
  return th;
}

inline nlohmann::ordered_json thresholds_to_json(const OutcomeThresholds& th) {
  nlohmann::ordered_json j;
  j["close_frac"] = th.close_frac;
  j["unchanged_frac"] = th.unchanged_frac;
  j["damage_drop"] = th.damage_drop;
  return j;
}

}  // namespace inoc
