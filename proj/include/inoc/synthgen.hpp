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

// Synthetic datasets.
//
// gen_original plants two annotation artifacts in an otherwise random
// text-pair corpus: lexical overlap predicts entailment, and negation words
// predict contradiction. gen_numeric builds the numerical-reasoning set cell
// by cell so the three-rule baseline has an exactly known accuracy.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "inoc/corpus.hpp"
#include "inoc/errors.hpp"
#include "inoc/rng.hpp"
#include "inoc/text.hpp"
#include "json.hpp"

namespace inoc {

struct SplitCounts {
  std::size_t train = 20000;
  std::size_t dev = 2000;
  std::size_t test = 2000;
};

struct SynthConfig {
  std::size_t vocab_size = 5000;
  std::size_t premise_len_min = 8;
  std::size_t premise_len_max = 20;
  std::size_t hypothesis_len_min = 4;
  std::size_t hypothesis_len_max = 4;
  SplitCounts counts;
  double overlap_entail_rate = 0.9;
  double negation_contra_rate = 0.7;
  std::uint64_t seed = 13;

  void validate() const {
    if (vocab_size < 100) throw ConfigError("vocab_size must be at least 100");
    if (premise_len_min < 1 || premise_len_min > premise_len_max) {
      throw ConfigError("premise length range is empty");
    }
    if (hypothesis_len_min < 4 || hypothesis_len_min > hypothesis_len_max) {
      throw ConfigError("hypothesis length range must be within [4, inf)");
    }
    if (hypothesis_len_max > premise_len_min) {
      throw ConfigError("hypotheses may not be longer than premises");
    }
    auto in_unit = [](double r) { return r >= 0.0 && r <= 1.0; };
    if (!in_unit(overlap_entail_rate) || !in_unit(negation_contra_rate)) {
      throw ConfigError("artifact rates must lie in [0, 1]");
    }
  }
};

// Words the perturbations append; generated originals never contain them.
inline constexpr std::array<std::string_view, 4> kReservedWords = {
    "true", "false", "is", "and"};
inline constexpr std::array<std::string_view, 2> kNegationWords = {"no", "not"};

inline std::string vocab_word(std::size_t index) {
  return "w" + std::to_string(index);
}

namespace detail {

inline std::size_t ceil_frac(std::size_t n, double frac) {
  return static_cast<std::size_t>(std::ceil(frac * static_cast<double>(n) - 1e-9));
}
inline std::size_t floor_frac(std::size_t n, double frac) {
  return static_cast<std::size_t>(std::floor(frac * static_cast<double>(n) + 1e-9));
}

// Builds one premise/hypothesis pair in which exactly `copied` hypothesis
// tokens occur in the premise. `extra` tokens (negations) are placed in the
// hypothesis and count toward its length.
struct PairBuilder {
  const SynthConfig& cfg;
  Rng& rng;

  std::vector<std::string> premise() {
    const auto len = static_cast<std::size_t>(rng.between(
        static_cast<std::int64_t>(cfg.premise_len_min),
        static_cast<std::int64_t>(cfg.premise_len_max)));
    std::unordered_set<std::size_t> used;
    std::vector<std::string> words;
    while (words.size() < len) {
      std::size_t w = rng.below(cfg.vocab_size);
      if (used.insert(w).second) words.push_back(vocab_word(w));
    }
    return words;
  }

  std::vector<std::string> hypothesis(const std::vector<std::string>& premise,
                                      std::size_t len, std::size_t copied,
                                      const std::vector<std::string>& extra) {
    std::unordered_set<std::string> in_premise(premise.begin(), premise.end());
    std::vector<std::string> words = extra;
    // Distinct premise positions while available.
    std::vector<std::size_t> positions(premise.size());
    for (std::size_t i = 0; i < positions.size(); ++i) positions[i] = i;
    rng.shuffle(std::span<std::size_t>(positions));
    for (std::size_t i = 0; i < copied; ++i) {
      std::size_t p = i < positions.size() ? positions[i]
                                           : rng.below(premise.size());
      words.push_back(premise[p]);
    }
    while (words.size() < len) {
      std::string w = vocab_word(rng.below(cfg.vocab_size));
      if (!in_premise.count(w)) words.push_back(std::move(w));
    }
    rng.shuffle(std::span<std::string>(words));
    return words;
  }
};

inline Example original_example(const SynthConfig& cfg, Rng& rng,
                                std::string id) {
  PairBuilder builder{cfg, rng};
  Example e;
  e.id = std::move(id);
  e.label = kAllLabels[rng.below(kNumLabels)];
  const std::vector<std::string> premise = builder.premise();
  const auto len = static_cast<std::size_t>(
      rng.between(static_cast<std::int64_t>(cfg.hypothesis_len_min),
                  static_cast<std::int64_t>(cfg.hypothesis_len_max)));
  std::size_t lo = 0;
  std::size_t hi = len;
  std::vector<std::string> extra;
  switch (e.label) {
    case Label::kEntailment:
      if (rng.bernoulli(cfg.overlap_entail_rate)) lo = ceil_frac(len, 0.75);
      break;
    case Label::kNeutral:
      lo = ceil_frac(len, 0.40);
      hi = std::max(lo, floor_frac(len, 0.60));
      break;
    case Label::kContradiction:
      if (rng.bernoulli(cfg.negation_contra_rate)) {
        extra.emplace_back(kNegationWords[rng.below(kNegationWords.size())]);
      }
      hi = std::min(floor_frac(len, 0.25), len - extra.size());
      break;
  }
  const auto copied = static_cast<std::size_t>(
      rng.between(static_cast<std::int64_t>(lo), static_cast<std::int64_t>(hi)));
  e.premise = join_words(premise);
  e.hypothesis = join_words(builder.hypothesis(premise, len, copied, extra));
  return e;
}

inline DatasetSplit original_split(const SynthConfig& cfg,
                                   std::string_view name, std::size_t count) {
  DatasetSplit split;
  split.name = std::string(name);
  split.examples.reserve(count);
  Rng rng(derive_seed(cfg.seed, std::string("original/") + split.name));
  for (std::size_t i = 0; i < count; ++i) {
    split.examples.push_back(
        original_example(cfg, rng, split.name + "-" + std::to_string(i)));
  }
  return split;
}

}  // namespace detail

// Deterministic in cfg. Ids are "<split>-<index>".
inline DatasetBundle gen_original(const SynthConfig& cfg) {
  cfg.validate();
  DatasetBundle bundle;
  bundle.train = detail::original_split(cfg, "train", cfg.counts.train);
  bundle.dev = detail::original_split(cfg, "dev", cfg.counts.dev);
  bundle.test = detail::original_split(cfg, "test", cfg.counts.test);
  return bundle;
}

// Every example carries `label` but is built like a high-overlap entailment
// pair, so it contradicts the original data's overlap cue. Used as a
// label-skewed challenge set.
inline DatasetBundle gen_single_label(const SynthConfig& cfg, Label label) {
  cfg.validate();
  auto make = [&](std::string_view name, std::size_t count) {
    DatasetSplit split;
    split.name = std::string(name);
    Rng rng(derive_seed(cfg.seed, std::string("single_label/") + split.name));
    detail::PairBuilder builder{cfg, rng};
    for (std::size_t i = 0; i < count; ++i) {
      Example e;
      e.id = "skew-" + split.name + "-" + std::to_string(i);
      e.label = label;
      const std::vector<std::string> premise = builder.premise();
      const auto len = static_cast<std::size_t>(
          rng.between(static_cast<std::int64_t>(cfg.hypothesis_len_min),
                      static_cast<std::int64_t>(cfg.hypothesis_len_max)));
      const auto copied = static_cast<std::size_t>(
          rng.between(static_cast<std::int64_t>(detail::ceil_frac(len, 0.75)),
                      static_cast<std::int64_t>(len - 1)));
      e.premise = join_words(premise);
      e.hypothesis = join_words(builder.hypothesis(premise, len, copied, {}));
      e.provenance = "single_label";
      split.examples.push_back(std::move(e));
    }
    return split;
  };
  DatasetBundle bundle;
  bundle.train = make("train", cfg.counts.train);
  bundle.dev = make("dev", cfg.counts.dev);
  bundle.test = make("test", cfg.counts.test);
  return bundle;
}

// Cell counts of the numerical-reasoning set. Category A: no comparative
// phrase anywhere. B: the hypothesis has one. C: only the premise has one.
struct NumericCategoryCounts {
  std::size_t a_contradiction = 1235;
  std::size_t b_neutral = 2532;
  std::size_t b_entailment = 66;
  std::size_t b_contradiction = 66;
  std::size_t c_entailment = 2466;
  std::size_t c_contradiction = 1231;

  std::size_t total() const {
    return a_contradiction + b_neutral + b_entailment + b_contradiction +
           c_entailment + c_contradiction;
  }
};

enum class NumericCategory { kA, kB, kC };

inline bool has_comparative(std::string_view text) {
  return contains_ci(text, "more than") || contains_ci(text, "less than");
}

// Exactly one category holds for any example.
inline NumericCategory numeric_category(const Example& e) {
  if (has_comparative(e.hypothesis)) return NumericCategory::kB;
  if (has_comparative(e.premise)) return NumericCategory::kC;
  return NumericCategory::kA;
}

namespace detail {

inline constexpr std::array<std::string_view, 12> kNames = {
    "Tim", "Ana", "Raj", "Mei", "Omar", "Lena",
    "Kofi", "Sara", "Ivan", "Nia", "Paul", "Yuki"};
inline constexpr std::array<std::string_view, 10> kItems = {
    "pounds of cement", "apples",        "books",    "stamps",
    "marbles",          "gallons of oil", "tickets",  "coins",
    "pencils",          "boxes of nails"};

class NumericWriter {
 public:
  explicit NumericWriter(Rng& rng) : rng_(rng) {}

  Example make(Label label, NumericCategory cat) {
    const std::string name(kNames[rng_.below(kNames.size())]);
    const std::string item(kItems[rng_.below(kItems.size())]);
    const std::int64_t n1 = rng_.between(20, 900);
    const bool more = rng_.bernoulli(0.5);
    const std::string cmp = more ? "more than" : "less than";
    auto has = [&](std::string_view qty) {
      return name + " has " + std::string(qty) + " " + item + ".";
    };
    auto num = [](std::int64_t n) { return std::to_string(n); };

    Example e;
    e.label = label;
    switch (cat) {
      case NumericCategory::kA: {
        std::int64_t n2 = n1 + rng_.between(1, 300);
        e.premise = has(num(n1));
        e.hypothesis = has(num(n2));
        break;
      }
      case NumericCategory::kB: {
        if (label == Label::kNeutral) {
          e.premise = name + " bought " + num(n1) + " " + item + " last week.";
          e.hypothesis = has(cmp + " " + num(n1 + rng_.between(-10, 400)));
        } else {
          // Entailed when the bound lies on the stated side of n1.
          const bool holds = label == Label::kEntailment;
          const std::int64_t gap = rng_.between(1, std::min<std::int64_t>(200, n1 - 1));
          const std::int64_t bound = (more == holds) ? n1 - gap : n1 + gap;
          e.premise = has(num(n1));
          e.hypothesis = has(cmp + " " + num(bound));
        }
        break;
      }
      case NumericCategory::kC: {
        e.premise = has(cmp + " " + num(n1));
        if (label == Label::kEntailment) {
          e.hypothesis = has((more ? "at least " : "at most ") + num(n1));
        } else {
          const std::int64_t gap = rng_.between(1, std::min<std::int64_t>(200, n1 - 1));
          e.hypothesis = has(num(more ? n1 - gap : n1 + gap));
        }
        break;
      }
    }
    return e;
  }

 private:
  Rng& rng_;
};

}  // namespace detail

// Emits exactly the requested number of examples per (category, label) cell,
// in seeded random order. Ids are "num-<index>" after shuffling.
inline DatasetSplit gen_numeric(const NumericCategoryCounts& counts,
                                std::uint64_t seed) {
  Rng rng(derive_seed(seed, "numeric"));
  detail::NumericWriter writer(rng);
  std::vector<Example> examples;
  examples.reserve(counts.total());
  auto emit = [&](std::size_t n, Label label, NumericCategory cat) {
    for (std::size_t i = 0; i < n; ++i) {
      examples.push_back(writer.make(label, cat));
    }
  };
  emit(counts.a_contradiction, Label::kContradiction, NumericCategory::kA);
  emit(counts.b_neutral, Label::kNeutral, NumericCategory::kB);
  emit(counts.b_entailment, Label::kEntailment, NumericCategory::kB);
  emit(counts.b_contradiction, Label::kContradiction, NumericCategory::kB);
  emit(counts.c_entailment, Label::kEntailment, NumericCategory::kC);
  emit(counts.c_contradiction, Label::kContradiction, NumericCategory::kC);
  rng.shuffle(std::span<Example>(examples));

  DatasetSplit split;
  split.name = "numeric";
  for (std::size_t i = 0; i < examples.size(); ++i) {
    examples[i].id = "num-" + std::to_string(i);
    examples[i].provenance = "numerical_reasoning";
  }
  split.examples = std::move(examples);
  return split;
}

// Divides an unsplit challenge set: `train_size` examples for fine-tuning,
// then `dev_size` of the remainder for development, the rest for testing.
inline DatasetBundle split_challenge_pool(const DatasetSplit& pool,
                                          std::size_t train_size,
                                          std::size_t dev_size,
                                          std::uint64_t seed) {
  if (train_size + dev_size > pool.size()) {
    throw ConfigError("challenge pool of " + std::to_string(pool.size()) +
                      " examples is too small for the requested splits");
  }
  std::vector<std::size_t> order(pool.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng(derive_seed(seed, "split_challenge_pool"));
  rng.shuffle(std::span<std::size_t>(order));
  DatasetBundle bundle;
  bundle.train.name = "train";
  bundle.dev.name = "dev";
  bundle.test.name = "test";
  for (std::size_t i = 0; i < order.size(); ++i) {
    DatasetSplit& dst = i < train_size              ? bundle.train
                        : i < train_size + dev_size ? bundle.dev
                                                    : bundle.test;
    dst.examples.push_back(pool.examples[order[i]]);
  }
  return bundle;
}

enum class BaselineRule { kNoComparative = 0, kHypothesisComparative = 1, kPremiseComparative = 2 };

inline BaselineRule baseline_rule(const Example& e) {
  if (!has_comparative(e.premise) && !has_comparative(e.hypothesis)) {
    return BaselineRule::kNoComparative;
  }
  if (has_comparative(e.hypothesis)) return BaselineRule::kHypothesisComparative;
  return BaselineRule::kPremiseComparative;
}

// Three-rule numerical-reasoning baseline.
inline Label rules_baseline(const Example& e) {
  switch (baseline_rule(e)) {
    case BaselineRule::kNoComparative:
      return Label::kContradiction;
    case BaselineRule::kHypothesisComparative:
      return Label::kNeutral;
    case BaselineRule::kPremiseComparative:
      return Label::kEntailment;
  }
  return Label::kContradiction;
}

struct BaselineStats {
  std::array<std::size_t, 3> correct{};  // indexed by BaselineRule
  std::array<std::size_t, 3> wrong{};

  std::size_t total_correct() const { return correct[0] + correct[1] + correct[2]; }
  std::size_t total() const { return total_correct() + wrong[0] + wrong[1] + wrong[2]; }
  double accuracy() const {
    return total() == 0 ? 0.0
                        : static_cast<double>(total_correct()) /
                              static_cast<double>(total());
  }
};

inline BaselineStats run_baseline(const DatasetSplit& split) {
  BaselineStats stats;
  for (const Example& e : split.examples) {
    const auto rule = static_cast<std::size_t>(baseline_rule(e));
    if (rules_baseline(e) == e.label) {
      ++stats.correct[rule];
    } else {
      ++stats.wrong[rule];
    }
  }
  return stats;
}

// JSON configs. Unknown keys are rejected.

namespace detail {

template <typename F>
void for_each_key(const nlohmann::json& j, std::string_view what, F&& f) {
  if (!j.is_object()) throw ConfigError(std::string(what) + " must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (!f(key, value)) {
      throw ConfigError("unknown key '" + key + "' in " + std::string(what));
    }
  }
}

template <typename T>
T json_get(const nlohmann::json& v, std::string_view key) {
  try {
    return v.get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError("bad value for '" + std::string(key) + "'");
  }
}

}  // namespace detail

inline SynthConfig synth_config_from_json(const nlohmann::json& j,
                                          SynthConfig cfg = {}) {
  detail::for_each_key(j, "synth config", [&](const std::string& k,
                                              const nlohmann::json& v) {
    using detail::json_get;
    if (k == "vocab_size") cfg.vocab_size = json_get<std::size_t>(v, k);
    else if (k == "premise_len_range") {
      auto r = json_get<std::array<std::size_t, 2>>(v, k);
      cfg.premise_len_min = r[0];
      cfg.premise_len_max = r[1];
    } else if (k == "hypothesis_len_range") {
      auto r = json_get<std::array<std::size_t, 2>>(v, k);
      cfg.hypothesis_len_min = r[0];
      cfg.hypothesis_len_max = r[1];
    } else if (k == "counts") {
      detail::for_each_key(v, "counts", [&](const std::string& ck,
                                            const nlohmann::json& cv) {
        if (ck == "train") cfg.counts.train = json_get<std::size_t>(cv, ck);
        else if (ck == "dev") cfg.counts.dev = json_get<std::size_t>(cv, ck);
        else if (ck == "test") cfg.counts.test = json_get<std::size_t>(cv, ck);
        else return false;
        return true;
      });
    } else if (k == "artifact_strengths") {
      detail::for_each_key(v, "artifact_strengths", [&](const std::string& ak,
                                                        const nlohmann::json& av) {
        if (ak == "overlap_entail_rate") cfg.overlap_entail_rate = json_get<double>(av, ak);
        else if (ak == "negation_contra_rate") cfg.negation_contra_rate = json_get<double>(av, ak);
        else return false;
        return true;
      });
    } else if (k == "seed") cfg.seed = json_get<std::uint64_t>(v, k);
    else return false;
    return true;
  });
  cfg.validate();
  return cfg;
}

inline nlohmann::ordered_json synth_config_to_json(const SynthConfig& cfg) {
  nlohmann::ordered_json j;
  j["vocab_size"] = cfg.vocab_size;
  j["premise_len_range"] = {cfg.premise_len_min, cfg.premise_len_max};
  j["hypothesis_len_range"] = {cfg.hypothesis_len_min, cfg.hypothesis_len_max};
  j["counts"] = {{"train", cfg.counts.train}, {"dev", cfg.counts.dev}, {"test", cfg.counts.test}};
  j["artifact_strengths"] = {{"overlap_entail_rate", cfg.overlap_entail_rate},
                             {"negation_contra_rate", cfg.negation_contra_rate}};
  j["seed"] = cfg.seed;
  return j;
}

inline NumericCategoryCounts numeric_counts_from_json(const nlohmann::json& j) {
  NumericCategoryCounts c;
  using detail::json_get;
  detail::for_each_key(j, "numeric counts", [&](const std::string& k,
                                                const nlohmann::json& v) {
    if (k == "cat_a_contradiction") {
      c.a_contradiction = json_get<std::size_t>(v, k);
    } else if (k == "cat_b") {
      detail::for_each_key(v, "cat_b", [&](const std::string& bk, const nlohmann::json& bv) {
        if (bk == "neutral") c.b_neutral = json_get<std::size_t>(bv, bk);
        else if (bk == "entailment") c.b_entailment = json_get<std::size_t>(bv, bk);
        else if (bk == "contradiction") c.b_contradiction = json_get<std::size_t>(bv, bk);
        else return false;
        return true;
      });
    } else if (k == "cat_c") {
      detail::for_each_key(v, "cat_c", [&](const std::string& ck, const nlohmann::json& cv) {
        if (ck == "entailment") c.c_entailment = json_get<std::size_t>(cv, ck);
        else if (ck == "contradiction") c.c_contradiction = json_get<std::size_t>(cv, ck);
        else return false;
        return true;
      });
    } else {
      return false;
    }
    return true;
  });
  return c;
}

}  // namespace inoc
