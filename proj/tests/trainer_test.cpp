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

#include <gtest/gtest.h>

#include <sstream>

#include "inoc/synthgen.hpp"
#include "inoc/trainer.hpp"
#include "json.hpp"
#include "schedule_fixtures.hpp"

namespace inoc {
namespace {

FeatureConfig small_features() {
  FeatureConfig f;
  f.hash_dim = 1 << 12;
  return f;
}

DatasetBundle small_bundle(std::uint64_t seed = 13) {
  SynthConfig c;
  c.counts = {600, 200, 200};
  c.seed = seed;
  return gen_original(c);
}

TEST(Schedule, PlateauScheduleDirect) {
  PlateauSchedule s(0.01, 5, true);
  const std::vector<double> dev = {0.5, 0.6, 0.6, 0.6, 0.6, 0.6, 0.6};
  std::size_t stopped = 0;
  for (std::size_t e = 0; e < dev.size(); ++e) {
    s.observe(dev[e]);
    if (s.should_stop()) {
      stopped = e + 1;
      break;
    }
  }
  EXPECT_EQ(stopped, 7u);
  EXPECT_EQ(s.best_epoch(), 2u);
  EXPECT_EQ(s.best_metric(), 0.6);
}

TEST(Schedule, TwoHalvingsFromOneHundredth) {
  PlateauSchedule s(0.01, 5, true);
  s.observe(0.5);
  s.observe(0.4);
  s.observe(0.4);
  EXPECT_EQ(s.learning_rate(), 0.0025);
}

class Fixtures : public ::testing::TestWithParam<inoc_test::ScheduleFixture> {};

TEST_P(Fixtures, MatchesHandComputedSchedule) {
  EXPECT_EQ(inoc_test::check_schedule(GetParam()), "");
}

INSTANTIATE_TEST_SUITE_P(Stubbed, Fixtures, ::testing::ValuesIn(inoc_test::schedule_fixtures()),
                         [](const auto& info) { return info.param.name; });

TEST(Train, DeterministicGivenSeed) {
  const DatasetBundle b = small_bundle();
  TrainConfig cfg;
  cfg.max_epochs = 4;
  cfg.initial_lr = 0.1;
  const Checkpoint a = train(cfg, small_features(), b.train, b.dev);
  EXPECT_EQ(a, train(cfg, small_features(), b.train, b.dev));
  cfg.seed += 1;
  EXPECT_NE(a.params, train(cfg, small_features(), b.train, b.dev).params);
}

TEST(Train, TrainingLossDecreases) {
  const DatasetBundle b = small_bundle();
  TrainConfig cfg;
  cfg.max_epochs = 6;
  cfg.patience = 6;
  cfg.initial_lr = 0.05;
  const FeatureConfig f = small_features();
  const Checkpoint c = train(cfg, f, b.train, b.dev);
  const FeaturizedSplit tr = featurize_split(b.train, f);
  const double initial = mean_cross_entropy(ModelParams::init(f), tr);
  EXPECT_NEAR(initial, std::log(3.0), 1e-12);
  EXPECT_LT(c.history.back().train_loss, c.history.front().train_loss);
  EXPECT_LT(mean_cross_entropy(c.params, tr), initial);
}

TEST(Train, HistoryRecordsEveryEpoch) {
  const DatasetBundle b = small_bundle();
  TrainConfig cfg;
  cfg.max_epochs = 3;
  std::vector<EpochRecord> seen;
  const Checkpoint c = train(cfg, small_features(), b.train, b.dev,
                             [&](const EpochRecord& r) { seen.push_back(r); });
  ASSERT_EQ(c.history.size(), 3u);
  EXPECT_EQ(seen, c.history);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(c.history[i].epoch, i + 1);
}

// The trainer's step: params -= lr * (sum of per-example gradients). With a
// single batch of the whole set and l2 = 0 that is -lr * N * mean gradient.
TEST(Train, OneBatchStepIsLrTimesSummedGradient) {
  const DatasetBundle b = small_bundle();
  const FeatureConfig f = small_features();
  const FeaturizedSplit tr = featurize_split(b.train, f);
  TrainConfig cfg;
  cfg.max_epochs = 1;
  cfg.batch_size = tr.items.size();
  cfg.l2 = 0.0;
  cfg.initial_lr = 0.01;
  const Checkpoint c = optimize(ModelParams::init(f), cfg, tr, [](const ModelParams&) { return 0.5; });
  const LossAndGradient lg = loss_and_grad(ModelParams::init(f), tr.items, 0.0);
  const double n = static_cast<double>(tr.items.size());
  for (std::size_t k = 0; k < kNumLabels; ++k) {
    EXPECT_NEAR(c.params.bias[k], -0.01 * n * lg.grad.bias[k], 1e-12);
  }
  for (std::size_t col = 0; col < lg.grad.columns.size(); ++col) {
    for (std::size_t k = 0; k < kNumLabels; ++k) {
      const double expected = -0.01 * n * lg.grad.column_values[col * kNumLabels + k];
      EXPECT_NEAR(c.params.weights[lg.grad.columns[col] * kNumLabels + k], expected, 1e-12);
    }
  }
}

TEST(Train, EmptySplitsRejected) {
  const DatasetBundle b = small_bundle();
  EXPECT_THROW(train(TrainConfig{}, small_features(), DatasetSplit{}, b.dev), DataError);
  EXPECT_THROW(train(TrainConfig{}, small_features(), b.train, DatasetSplit{}), DataError);
}

TEST(TrainConfig, Validation) {
  TrainConfig c;
  c.patience = 0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = TrainConfig{};
  c.initial_lr = 0.0;
  EXPECT_THROW(c.validate(), ConfigError);
  EXPECT_THROW(train_config_from_json(nlohmann::json{{"momentum", 0.9}}), ConfigError);
  EXPECT_THROW(train_config_from_json(nlohmann::json{{"validation_split_role", "test"}}),
               ConfigError);
  TrainConfig d;
  d.initial_lr = 0.3;
  d.seed = 5;
  const TrainConfig back =
      train_config_from_json(nlohmann::json::parse(train_config_to_json(d).dump()));
  EXPECT_EQ(train_config_to_json(back), train_config_to_json(d));
}

TEST(Evaluate, ConstantPredictorAndSmallSplits) {
  ModelParams p = ModelParams::init(small_features());
  p.bias[1] = 5.0;  // always neutral
  Checkpoint c;
  c.params = p;
  DatasetSplit s;
  for (int i = 0; i < 4; ++i) s.examples.push_back({"n" + std::to_string(i), "a b", "c", Label::kNeutral, {}});
  EXPECT_EQ(evaluate(c, s), 1.0);
  DatasetSplit three;
  three.examples = {{"a", "x y", "z", Label::kNeutral, {}},
                    {"b", "x y", "z", Label::kEntailment, {}},
                    {"c", "x y", "z", Label::kContradiction, {}}};
  EXPECT_DOUBLE_EQ(evaluate(c, three), 1.0 / 3.0);
  EXPECT_THROW(evaluate(c, DatasetSplit{}), DataError);
}

TEST(Evaluate, MatchesBruteForceRecount) {
  const DatasetBundle b = small_bundle();
  TrainConfig cfg;
  cfg.max_epochs = 2;
  const Checkpoint c = train(cfg, small_features(), b.train, b.dev);
  DatasetSplit fifty;
  fifty.examples.assign(b.test.examples.begin(), b.test.examples.begin() + 50);
  std::size_t correct = 0;
  for (const Example& e : fifty.examples) correct += predict(c.params, e) == e.label;
  EXPECT_DOUBLE_EQ(evaluate(c, fifty), static_cast<double>(correct) / 50.0);
}

TEST(FineTune, ZeroEpochsReturnsBase) {
  const DatasetBundle b = small_bundle();
  TrainConfig cfg;
  cfg.max_epochs = 2;
  const Checkpoint base = train(cfg, small_features(), b.train, b.dev);
  TrainConfig ft;
  ft.max_epochs = 0;
  EXPECT_EQ(fine_tune(base, b.test, b.dev, ft), base);
}

TEST(FineTune, SingleLabelSkewIsLearnedWithinTwentyEpochs) {
  const DatasetBundle b = small_bundle();
  TrainConfig cfg;
  cfg.max_epochs = 3;
  const Checkpoint base = train(cfg, small_features(), b.train, b.dev);
  SynthConfig sc;
  sc.counts = {200, 0, 200};
  sc.seed = 3;
  const DatasetBundle skew = gen_single_label(sc, Label::kContradiction);
  // Validate on the skewed set itself so selection follows the skew.
  TrainConfig ft;
  ft.max_epochs = 20;
  ft.initial_lr = 0.05;
  const Checkpoint tuned = fine_tune(base, skew.train, skew.test, ft);
  EXPECT_LE(tuned.history.size(), 20u);
  EXPECT_EQ(evaluate(tuned, skew.train), 1.0);
}

TEST(FineTune, DeterministicAndDoesNotMutateBase) {
  const DatasetBundle b = small_bundle();
  TrainConfig cfg;
  cfg.max_epochs = 2;
  const Checkpoint base = train(cfg, small_features(), b.train, b.dev);
  const Checkpoint copy = base;
  TrainConfig ft;
  ft.max_epochs = 3;
  ft.initial_lr = 0.01;
  const Checkpoint a = fine_tune(base, b.test, b.dev, ft);
  EXPECT_EQ(a, fine_tune(base, b.test, b.dev, ft));
  EXPECT_EQ(base, copy);
  EXPECT_EQ(a.history.front().learning_rate, 0.01);  // schedule restarts
}

TEST(FineTune, FeatureMismatchRejected) {
  const DatasetBundle b = small_bundle();
  TrainConfig cfg;
  cfg.max_epochs = 1;
  const Checkpoint base = train(cfg, small_features(), b.train, b.dev);
  TrainConfig ft;
  FeatureConfig other = small_features();
  other.use_char_ngrams = true;
  ft.expected_features = other;
  EXPECT_THROW(fine_tune(base, b.test, b.dev, ft), ConfigError);
  EXPECT_THROW(fine_tune(base, DatasetSplit{}, b.dev, TrainConfig{}), DataError);
}

TEST(History, JsonLinesKeys) {
  std::ostringstream out;
  write_history_jsonl({{1, 0.1, 0.9, 0.5}, {2, 0.05, 0.8, 0.6}}, out);
  std::istringstream in(out.str());
  std::string line;
  int n = 0;
  while (std::getline(in, line)) {
    const auto j = nlohmann::json::parse(line);
    for (const char* key : {"epoch", "lr", "train_loss", "dev_acc"}) EXPECT_TRUE(j.contains(key));
    ++n;
  }
  EXPECT_EQ(n, 2);
}

}  // namespace
}  // namespace inoc
