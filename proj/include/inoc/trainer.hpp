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

// Minibatch gradient descent with plateau-driven learning-rate halving and
// early stopping on development accuracy.
//
// The learning rate is a per-example step size: one minibatch update moves
// the parameters by -lr times the sum (not the mean) of the per-example
// gradients of cross-entropy plus (l2 / 2) |weights|^2.

#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "inoc/checkpoint.hpp"
#include "inoc/corpus.hpp"
#include "inoc/errors.hpp"
#include "inoc/model.hpp"
#include "inoc/rng.hpp"
#include "json.hpp"

namespace inoc {

struct TrainConfig {
  double initial_lr = 0.05;
  std::size_t batch_size = 32;
  std::size_t max_epochs = 75;
  std::size_t patience = 5;
  bool lr_halving = true;
  double l2 = 1e-6;
  std::uint64_t seed = 7;
  std::size_t hidden_units = 0;  // fresh training only
  // When set, fine_tune rejects a base checkpoint with different features.
  std::optional<FeatureConfig> expected_features;

  void validate() const {
    if (!(initial_lr > 0.0) || !std::isfinite(initial_lr)) {
      throw ConfigError("initial_lr must be positive");
    }
    if (batch_size == 0) throw ConfigError("batch_size must be positive");
    if (patience == 0) throw ConfigError("patience must be at least 1");
    if (l2 < 0.0 || !std::isfinite(l2)) throw ConfigError("l2 must be nonnegative");
  }
};

// Tracks best-so-far development accuracy. An epoch improves only if it
// beats the best by more than 1e-12; every other epoch halves the learning
// rate (when enabled) and counts toward patience.
class PlateauSchedule {
 public:
  static constexpr double kImprovementEpsilon = 1e-12;

  PlateauSchedule(double initial_lr, std::size_t patience, bool halving)
      : lr_(initial_lr), patience_(patience), halving_(halving) {}

  // Learning rate for the next epoch.
  double learning_rate() const { return lr_; }
  std::size_t best_epoch() const { return best_epoch_; }
  double best_metric() const { return best_; }
  bool should_stop() const { return bad_epochs_ >= patience_; }

  // Records the metric of the epoch just trained; returns true on a new best.
  bool observe(double metric) {
    ++epoch_;
    if (best_epoch_ == 0 || metric > best_ + kImprovementEpsilon) {
      best_ = metric;
      best_epoch_ = epoch_;
      bad_epochs_ = 0;
      return true;
    }
    ++bad_epochs_;
    if (halving_) lr_ *= 0.5;
    return false;
  }

 private:
  double lr_;
  std::size_t patience_;
  bool halving_;
  std::size_t epoch_ = 0;
  std::size_t best_epoch_ = 0;
  double best_ = 0.0;
  std::size_t bad_epochs_ = 0;
};

struct FeaturizedSplit {
  FeatureConfig config;
  std::vector<LabeledVector> items;
};

inline FeaturizedSplit featurize_split(const DatasetSplit& split,
                                       const FeatureConfig& cfg) {
  FeaturizedSplit out;
  out.config = cfg;
  out.items.reserve(split.size());
  for (const Example& e : split.examples) {
    out.items.push_back({featurize(e, cfg), e.label});
  }
  return out;
}

inline double accuracy(const ModelParams& p, const FeaturizedSplit& split) {
  if (split.items.empty()) throw DataError("cannot evaluate on an empty split");
  if (!(split.config == p.features)) {
    throw ConfigError("split was featurized with a different feature config");
  }
  std::size_t correct = 0;
  for (const LabeledVector& item : split.items) {
    correct += argmax_label(forward(p, item.features)) == item.label;
  }
  return static_cast<double>(correct) / static_cast<double>(split.items.size());
}

inline double evaluate(const Checkpoint& c, const DatasetSplit& split) {
  if (split.empty()) throw DataError("cannot evaluate on an empty split");
  return accuracy(c.params, featurize_split(split, c.params.features));
}

// Mean cross-entropy (no regularizer) over a featurized split.
inline double mean_cross_entropy(const ModelParams& p, const FeaturizedSplit& split) {
  if (split.items.empty()) throw DataError("empty split");
  double total = 0.0;
  for (const LabeledVector& item : split.items) {
    total -= std::log(forward(p, item.features)[label_index(item.label)]);
  }
  return total / static_cast<double>(split.items.size());
}

using DevMetric = std::function<double(const ModelParams&)>;
using EpochCallback = std::function<void(const EpochRecord&)>;

namespace detail {

// Applies one minibatch update given the summed data gradient. The input
// weights live as input_scale * params.weights during an epoch.
inline void apply_update(ModelParams& p, double& input_scale, const Gradient& g,
                         double lr, std::size_t batch_len, double l2) {
  const double decay = 1.0 - lr * l2 * static_cast<double>(batch_len);
  if (!(decay > 0.0)) throw ConfigError("lr * l2 * batch_size must be below 1");
  input_scale *= decay;
  const std::size_t w = g.width;
  const double step = lr / input_scale;
  for (std::size_t c = 0; c < g.columns.size(); ++c) {
    double* col = p.weights.data() + static_cast<std::size_t>(g.columns[c]) * w;
    const double* gc = g.column_values.data() + c * w;
    for (std::size_t u = 0; u < w; ++u) col[u] -= step * gc[u];
  }
  for (std::size_t u = 0; u < w; ++u) p.bias[u] -= lr * g.bias[u];
  for (std::size_t i = 0; i < p.out_weights.size(); ++i) {
    p.out_weights[i] = decay * p.out_weights[i] - lr * g.out_weights[i];
  }
  for (std::size_t k = 0; k < p.out_bias.size(); ++k) p.out_bias[k] -= lr * g.out_bias[k];
}

inline void fold_scale(ModelParams& p, double& input_scale) {
  if (input_scale == 1.0) return;
  for (double& x : p.weights) x *= input_scale;
  input_scale = 1.0;
}

}  // namespace detail

// The shared loop of train and fine_tune. Starts from `init`, evaluates
// `dev_metric` after every epoch and returns the parameters of the first
// epoch reaching the best metric. With max_epochs == 0 returns `init`.
inline Checkpoint optimize(ModelParams init, const TrainConfig& cfg,
                           const FeaturizedSplit& train, const DevMetric& dev_metric,
                           const EpochCallback& on_epoch = {}) {
  cfg.validate();
  if (train.items.empty()) throw DataError("training split is empty");
  if (!(train.config == init.features)) {
    throw ConfigError("training data featurized with a different feature config");
  }
  Checkpoint result;
  result.seed = cfg.seed;
  result.params = init;
  if (cfg.max_epochs == 0) return result;

  ModelParams params = std::move(init);
  PlateauSchedule schedule(cfg.initial_lr, cfg.patience, cfg.lr_halving);
  std::vector<std::size_t> order(train.items.size());
  std::vector<LabeledVector> batch;
  std::unordered_map<std::uint32_t, std::size_t> slot;

  for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    const double lr = schedule.learning_rate();
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(derive_seed(cfg.seed, "epoch/" + std::to_string(epoch)));
    rng.shuffle(std::span<std::size_t>(order));

    double input_scale = 1.0;
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      batch.clear();
      for (std::size_t i = start; i < end; ++i) batch.push_back(train.items[order[i]]);
      Gradient g = detail::zero_gradient(params);
      slot.clear();
      loss_sum += detail::accumulate_data_gradient(params, input_scale, batch, g, slot);
      detail::apply_update(params, input_scale, g, lr, batch.size(), cfg.l2);
    }
    detail::fold_scale(params, input_scale);
    if (!params.all_finite()) {
      throw RuntimeError("training diverged at epoch " + std::to_string(epoch));
    }

    EpochRecord record;
    record.epoch = epoch;
    record.learning_rate = lr;
    record.train_loss = loss_sum / static_cast<double>(order.size());
    record.dev_accuracy = dev_metric(params);
    result.history.push_back(record);
    if (on_epoch) on_epoch(record);

    if (schedule.observe(record.dev_accuracy)) result.params = params;
    if (schedule.should_stop()) break;
  }
  return result;
}

inline Checkpoint train(const TrainConfig& cfg, const FeatureConfig& features,
                        const DatasetSplit& train_split, const DatasetSplit& dev,
                        const EpochCallback& on_epoch = {}) {
  cfg.validate();
  features.validate();
  if (train_split.empty()) throw DataError("training split is empty");
  if (dev.empty()) throw DataError("development split is empty");
  const FeaturizedSplit train_vecs = featurize_split(train_split, features);
  const FeaturizedSplit dev_vecs = featurize_split(dev, features);
  return optimize(ModelParams::init(features, cfg.hidden_units, cfg.seed), cfg, train_vecs,
                  [&](const ModelParams& p) { return accuracy(p, dev_vecs); }, on_epoch);
}

// Continues training `base` on challenge data, validating on the original
// development set. The learning-rate schedule restarts at cfg.initial_lr.
// `base` is not modified.
inline Checkpoint fine_tune(const Checkpoint& base, const FeaturizedSplit& challenge_train,
                            const FeaturizedSplit& original_dev, const TrainConfig& cfg,
                            const EpochCallback& on_epoch = {}) {
  cfg.validate();
  base.params.check_shape();
  if (cfg.expected_features && !(*cfg.expected_features == base.params.features)) {
    throw ConfigError("base checkpoint feature config does not match the run config");
  }
  if (cfg.max_epochs == 0) return base;
  if (challenge_train.items.empty()) throw DataError("challenge training split is empty");
  Checkpoint tuned =
      optimize(base.params, cfg, challenge_train,
               [&](const ModelParams& p) { return accuracy(p, original_dev); }, on_epoch);
  return tuned;
}

inline Checkpoint fine_tune(const Checkpoint& base, const DatasetSplit& challenge_train,
                            const DatasetSplit& original_dev, const TrainConfig& cfg,
                            const EpochCallback& on_epoch = {}) {
  if (cfg.max_epochs == 0) return base;
  const FeatureConfig& f = base.params.features;
  return fine_tune(base, featurize_split(challenge_train, f), featurize_split(original_dev, f),
                   cfg, on_epoch);
}

// History log line: {"epoch", "lr", "train_loss", "dev_acc"}.
inline void write_history_jsonl(const std::vector<EpochRecord>& history, std::ostream& out) {
  for (const EpochRecord& r : history) out << epoch_record_to_json(r).dump() << '\n';
}

inline TrainConfig train_config_from_json(const nlohmann::json& j, TrainConfig cfg = {}) {
  if (!j.is_object()) throw ConfigError("train config must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    try {
      if (key == "initial_lr") cfg.initial_lr = value.get<double>();
      else if (key == "batch_size") cfg.batch_size = value.get<std::size_t>();
      else if (key == "max_epochs") cfg.max_epochs = value.get<std::size_t>();
      else if (key == "patience") cfg.patience = value.get<std::size_t>();
      else if (key == "lr_halving") cfg.lr_halving = value.get<bool>();
      else if (key == "l2") cfg.l2 = value.get<double>();
      else if (key == "seed") cfg.seed = value.get<std::uint64_t>();
      else if (key == "hidden_units") cfg.hidden_units = value.get<std::size_t>();
      else if (key == "validation_split_role") {
        if (value.get<std::string>() != "original_dev") {
          throw ConfigError("validation_split_role must be 'original_dev'");
        }
      } else {
        throw ConfigError("unknown key '" + key + "' in train config");
      }
    } catch (const nlohmann::json::exception&) {
      throw ConfigError("bad value for '" + key + "' in train config");
    }
  }
  cfg.validate();
  return cfg;
}

inline nlohmann::ordered_json train_config_to_json(const TrainConfig& c) {
  nlohmann::ordered_json j;
  j["initial_lr"] = c.initial_lr;
  j["batch_size"] = c.batch_size;
  j["max_epochs"] = c.max_epochs;
  j["patience"] = c.patience;
  j["lr_halving"] = c.lr_halving;
  j["l2"] = c.l2;
  j["seed"] = c.seed;
  j["hidden_units"] = c.hidden_units;
  j["validation_split_role"] = "original_dev";
  return j;
}

}  // namespace inoc
