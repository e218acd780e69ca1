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

// Text-pair classifier over hashed sparse features.
//
// Features (all hashed into [0, hash_dim) with FNV-1a 64 over
// "<namespace>\x1f<text>"):
//   p: / h:     premise / hypothesis unigrams (counts)
//   pb: / hb:   premise / hypothesis bigrams (counts)
//   ov:         word-overlap bucket, one-hot; the ratio is the fraction of
//               hypothesis tokens that occur in the premise, bucket
//               min(9, floor(10 * ratio))
//   pc: / hc:   character 3..5-grams of each "<token>" (counts)
//   sov:        overlap bucket computed on semi-character word keys (first
//               letter, sorted interior letters, last letter), one-hot
// The last two families are present only with use_char_ngrams.
//
// The model is softmax(W x + b) or, with a hidden layer,
// softmax(V tanh(W x + c) + b). Input weights are stored feature-major so a
// sparse input touches one contiguous block per feature.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "inoc/corpus.hpp"
#include "inoc/errors.hpp"
#include "inoc/rng.hpp"
#include "inoc/text.hpp"

namespace inoc {

struct FeatureConfig {
  std::size_t hash_dim = std::size_t{1} << 18;
  bool use_unigrams = true;
  bool use_bigrams = true;
  bool use_cross_overlap = true;
  bool use_char_ngrams = false;

  void validate() const {
    if (hash_dim < 2) throw ConfigError("hash_dim must be at least 2");
    if (hash_dim > (std::size_t{1} << 31)) throw ConfigError("hash_dim too large");
    if (!use_unigrams && !use_bigrams && !use_cross_overlap && !use_char_ngrams) {
      throw ConfigError("at least one feature family must be enabled");
    }
  }

  friend bool operator==(const FeatureConfig&, const FeatureConfig&) = default;
};

inline constexpr std::size_t kOverlapBuckets = 10;
inline constexpr double kOverlapCountScale = 0.1;

struct SparseEntry {
  std::uint32_t index;
  double value;

  friend bool operator==(const SparseEntry&, const SparseEntry&) = default;
};

// Sorted by index, indices unique.
using SparseVector = std::vector<SparseEntry>;

inline std::uint32_t feature_index(std::string_view ns, std::string_view text,
                                   std::size_t hash_dim) {
  std::uint64_t h = fnv1a(ns);
  h = fnv1a("\x1f", h);
  h = fnv1a(text, h);
  return static_cast<std::uint32_t>(h % hash_dim);
}

inline std::size_t overlap_bucket(double ratio) {
  auto b = static_cast<std::size_t>(std::floor(ratio * kOverlapBuckets + 1e-9));
  return std::min(b, kOverlapBuckets - 1);
}

namespace detail {

// Number of hypothesis tokens found in the premise.
inline std::size_t overlap_hits(const std::vector<std::string>& premise,
                                const std::vector<std::string>& hypothesis) {
  std::unordered_set<std::string_view> seen(premise.begin(), premise.end());
  std::size_t hits = 0;
  for (const std::string& t : hypothesis) hits += seen.count(t);
  return hits;
}

// Fraction of premise tokens that also occur in the hypothesis. Duplicates
// count once per occurrence.
inline double overlap_ratio(const std::vector<std::string>& premise,
                            const std::vector<std::string>& hypothesis) {
  if (premise.empty()) return 0.0;
  return static_cast<double>(overlap_hits(hypothesis, premise)) /
         static_cast<double>(premise.size());
}

inline std::vector<std::string> semi_character_keys(
    const std::vector<std::string>& tokens) {
  std::vector<std::string> keys;
  keys.reserve(tokens.size());
  for (const std::string& t : tokens) keys.push_back(semi_character_key(t));
  return keys;
}

class FeatureSink {
 public:
  explicit FeatureSink(std::size_t dim) : dim_(dim) {}

  void add(std::string_view ns, std::string_view text, double value = 1.0) {
    entries_.push_back({feature_index(ns, text, dim_), value});
  }

  SparseVector finish() && {
    std::sort(entries_.begin(), entries_.end(),
              [](const SparseEntry& a, const SparseEntry& b) {
                return a.index < b.index;
              });
    SparseVector out;
    out.reserve(entries_.size());
    for (const SparseEntry& e : entries_) {
      if (!out.empty() && out.back().index == e.index) {
        out.back().value += e.value;
      } else {
        out.push_back(e);
      }
    }
    return out;
  }

 private:
  std::size_t dim_;
  std::vector<SparseEntry> entries_;
};

inline void add_token_features(FeatureSink& sink, const FeatureConfig& cfg,
                               const std::vector<std::string>& tokens,
                               std::string_view uni_ns, std::string_view bi_ns,
                               std::string_view char_ns) {
  if (cfg.use_unigrams) {
    for (const std::string& t : tokens) sink.add(uni_ns, t);
  }
  if (cfg.use_bigrams) {
    for (std::size_t i = 1; i < tokens.size(); ++i) {
      sink.add(bi_ns, tokens[i - 1] + " " + tokens[i]);
    }
  }
  if (cfg.use_char_ngrams) {
    for (const std::string& t : tokens) {
      const std::string padded = "<" + t + ">";
      for (std::size_t n = 3; n <= 5; ++n) {
        for (std::size_t i = 0; i + n <= padded.size(); ++i) {
          sink.add(char_ns, std::string_view(padded).substr(i, n));
        }
      }
    }
  }
}

// One-hot overlap-ratio bucket plus the scaled counts of hypothesis tokens found ("<ns>k") and
// not found ("<ns>n") in the premise. Zero counts are omitted.
inline void add_overlap_features(FeatureSink& sink, const std::vector<std::string>& premise,
                                 const std::vector<std::string>& hypothesis,
                                 std::string_view ns) {
  sink.add(ns, std::to_string(overlap_bucket(overlap_ratio(premise, hypothesis))));
  const std::size_t hits = overlap_hits(premise, hypothesis);
  const std::string base(ns);
  if (hits > 0) sink.add(base + "k", "", kOverlapCountScale * static_cast<double>(hits));
  if (hypothesis.size() > hits) {
    sink.add(base + "n", "",
             kOverlapCountScale * static_cast<double>(hypothesis.size() - hits));
  }
}

}  // namespace detail

inline SparseVector featurize(const Example& e, const FeatureConfig& cfg) {
  const std::vector<std::string> premise = tokenize(e.premise);
  const std::vector<std::string> hypothesis = tokenize(e.hypothesis);
  detail::FeatureSink sink(cfg.hash_dim);
  detail::add_token_features(sink, cfg, premise, "p", "pb", "pc");
  detail::add_token_features(sink, cfg, hypothesis, "h", "hb", "hc");
  if (cfg.use_cross_overlap) {
    detail::add_overlap_features(sink, premise, hypothesis, "ov");
  }
  if (cfg.use_char_ngrams) {
    detail::add_overlap_features(sink, detail::semi_character_keys(premise),
                                 detail::semi_character_keys(hypothesis), "sov");
  }
  return std::move(sink).finish();
}

using Probabilities = std::array<double, kNumLabels>;

struct ModelParams {
  FeatureConfig features;
  std::size_t hidden = 0;            // 0: linear softmax
  std::vector<double> weights;       // hash_dim x width(), feature-major
  std::vector<double> bias;          // width()
  std::vector<double> out_weights;   // kNumLabels x hidden, row-major
  std::vector<double> out_bias;      // kNumLabels, hidden layer only

  std::size_t width() const { return hidden == 0 ? kNumLabels : hidden; }

  // Zero input weights. A hidden layer gets seeded output weights so its
  // units are not symmetric.
  static ModelParams init(const FeatureConfig& features, std::size_t hidden = 0,
                          std::uint64_t seed = 0) {
    features.validate();
    ModelParams p;
    p.features = features;
    p.hidden = hidden;
    p.weights.assign(features.hash_dim * p.width(), 0.0);
    p.bias.assign(p.width(), 0.0);
    if (hidden > 0) {
      Rng rng(derive_seed(seed, "init/out_weights"));
      const double scale = 1.0 / std::sqrt(static_cast<double>(hidden));
      p.out_weights.resize(kNumLabels * hidden);
      for (double& w : p.out_weights) w = (2.0 * rng.uniform() - 1.0) * scale;
      p.out_bias.assign(kNumLabels, 0.0);
    }
    return p;
  }

  void check_shape() const {
    features.validate();
    if (weights.size() != features.hash_dim * width() || bias.size() != width() ||
        out_weights.size() != (hidden ? kNumLabels * hidden : 0) ||
        out_bias.size() != (hidden ? kNumLabels : 0)) {
      throw DataError("model parameter shapes do not match the feature config");
    }
  }

  bool all_finite() const {
    auto finite = [](const std::vector<double>& v) {
      return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
    };
    return finite(weights) && finite(bias) && finite(out_weights) && finite(out_bias);
  }

  friend bool operator==(const ModelParams&, const ModelParams&) = default;
};

namespace detail {

inline void check_indices(const ModelParams& p, const SparseVector& x) {
  if (!x.empty() && x.back().index >= p.features.hash_dim) {
    throw DataError("feature index out of range for model");
  }
}

// Intermediate values of one forward pass. input_scale multiplies the input
// weights; the trainer uses it to apply weight decay without touching every
// coordinate.
struct Activations {
  std::vector<double> pre;     // width
  std::vector<double> hidden;  // tanh(pre), hidden layer only
  Probabilities logits{};
  Probabilities probs{};
};

inline void softmax_into(const Probabilities& logits, Probabilities& probs) {
  const double m = *std::max_element(logits.begin(), logits.end());
  double z = 0.0;
  for (std::size_t k = 0; k < kNumLabels; ++k) {
    probs[k] = std::exp(logits[k] - m);
    z += probs[k];
  }
  for (double& p : probs) p /= z;
}

inline void forward_into(const ModelParams& p, double input_scale,
                         const SparseVector& x, Activations& act) {
  const std::size_t w = p.width();
  act.pre.assign(p.bias.begin(), p.bias.end());
  std::vector<double> acc(w, 0.0);
  for (const SparseEntry& f : x) {
    const double* col = p.weights.data() + static_cast<std::size_t>(f.index) * w;
    for (std::size_t u = 0; u < w; ++u) acc[u] += f.value * col[u];
  }
  for (std::size_t u = 0; u < w; ++u) act.pre[u] += input_scale * acc[u];
  if (p.hidden == 0) {
    for (std::size_t k = 0; k < kNumLabels; ++k) act.logits[k] = act.pre[k];
  } else {
    act.hidden.resize(p.hidden);
    for (std::size_t u = 0; u < p.hidden; ++u) act.hidden[u] = std::tanh(act.pre[u]);
    for (std::size_t k = 0; k < kNumLabels; ++k) {
      double s = p.out_bias[k];
      const double* row = p.out_weights.data() + k * p.hidden;
      for (std::size_t u = 0; u < p.hidden; ++u) s += row[u] * act.hidden[u];
      act.logits[k] = s;
    }
  }
  for (double l : act.logits) {
    if (!std::isfinite(l)) throw RuntimeError("non-finite logit in forward pass");
  }
  softmax_into(act.logits, act.probs);
}

}  // namespace detail

// Softmax class probabilities, in Label order.
inline Probabilities forward(const ModelParams& p, const SparseVector& x) {
  detail::check_indices(p, x);
  detail::Activations act;
  detail::forward_into(p, 1.0, x, act);
  return act.probs;
}

// Highest probability wins; ties go to the earlier label.
inline Label argmax_label(const Probabilities& probs) {
  std::size_t best = 0;
  for (std::size_t k = 1; k < kNumLabels; ++k) {
    if (probs[k] > probs[best]) best = k;
  }
  return kAllLabels[best];
}

inline Label predict(const ModelParams& p, const Example& e) {
  return argmax_label(forward(p, featurize(e, p.features)));
}

struct LabeledVector {
  SparseVector features;
  Label label;
};

// Gradient of the mean cross-entropy plus (l2 / 2) * |weights|^2 over input
// and output weights (biases are not regularized). The input-weight data
// term is stored only for the feature columns the batch touched.
struct Gradient {
  std::size_t width = 0;
  std::vector<std::uint32_t> columns;   // sorted
  std::vector<double> column_values;    // columns.size() x width
  std::vector<double> bias;
  std::vector<double> out_weights;      // data term only
  std::vector<double> out_bias;
  double l2 = 0.0;

  double weight(const ModelParams& p, std::uint32_t feature, std::size_t unit) const {
    double g = l2 * p.weights[static_cast<std::size_t>(feature) * width + unit];
    auto it = std::lower_bound(columns.begin(), columns.end(), feature);
    if (it != columns.end() && *it == feature) {
      g += column_values[static_cast<std::size_t>(it - columns.begin()) * width + unit];
    }
    return g;
  }

  double out_weight(const ModelParams& p, std::size_t i) const {
    return out_weights[i] + l2 * p.out_weights[i];
  }
};

namespace detail {

// Adds the summed (not averaged) data gradient of the batch into `grad` and
// returns the summed cross-entropy. Column order in `grad` follows first
// touch; callers sort if they need to.
inline double accumulate_data_gradient(const ModelParams& p, double input_scale,
                                       std::span<const LabeledVector> batch,
                                       Gradient& grad,
                                       std::unordered_map<std::uint32_t, std::size_t>& slot) {
  const std::size_t w = p.width();
  Activations act;
  std::vector<double> delta_pre(w);
  double loss = 0.0;
  for (const LabeledVector& item : batch) {
    check_indices(p, item.features);
    forward_into(p, input_scale, item.features, act);
    const std::size_t y = label_index(item.label);
    loss -= std::log(std::max(act.probs[y], 1e-300));
    Probabilities dlogit = act.probs;
    dlogit[y] -= 1.0;

    if (p.hidden == 0) {
      for (std::size_t k = 0; k < kNumLabels; ++k) delta_pre[k] = dlogit[k];
    } else {
      for (std::size_t k = 0; k < kNumLabels; ++k) {
        grad.out_bias[k] += dlogit[k];
        double* row = grad.out_weights.data() + k * p.hidden;
        for (std::size_t u = 0; u < p.hidden; ++u) row[u] += dlogit[k] * act.hidden[u];
      }
      for (std::size_t u = 0; u < p.hidden; ++u) {
        double s = 0.0;
        for (std::size_t k = 0; k < kNumLabels; ++k) {
          s += p.out_weights[k * p.hidden + u] * dlogit[k];
        }
        delta_pre[u] = s * (1.0 - act.hidden[u] * act.hidden[u]);
      }
    }
    for (std::size_t u = 0; u < w; ++u) grad.bias[u] += delta_pre[u];
    for (const SparseEntry& f : item.features) {
      auto [it, inserted] = slot.try_emplace(f.index, grad.columns.size());
      if (inserted) {
        grad.columns.push_back(f.index);
        grad.column_values.resize(grad.column_values.size() + w, 0.0);
      }
      // Gradient with respect to the effective weights input_scale * W.
      double* col = grad.column_values.data() + it->second * w;
      for (std::size_t u = 0; u < w; ++u) col[u] += f.value * delta_pre[u];
    }
  }
  return loss;
}

inline Gradient zero_gradient(const ModelParams& p) {
  Gradient g;
  g.width = p.width();
  g.bias.assign(p.width(), 0.0);
  g.out_weights.assign(p.out_weights.size(), 0.0);
  g.out_bias.assign(p.out_bias.size(), 0.0);
  return g;
}

inline void sort_columns(Gradient& g) {
  std::vector<std::size_t> order(g.columns.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return g.columns[a] < g.columns[b]; });
  std::vector<std::uint32_t> cols(order.size());
  std::vector<double> vals(g.column_values.size());
  for (std::size_t i = 0; i < order.size(); ++i) {
    cols[i] = g.columns[order[i]];
    std::copy_n(g.column_values.begin() + static_cast<std::ptrdiff_t>(order[i] * g.width),
                g.width, vals.begin() + static_cast<std::ptrdiff_t>(i * g.width));
  }
  g.columns = std::move(cols);
  g.column_values = std::move(vals);
}

inline double squared_norm(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return s;
}

}  // namespace detail

struct LossAndGradient {
  double loss = 0.0;
  Gradient grad;
};

inline LossAndGradient loss_and_grad(const ModelParams& p,
                                     std::span<const LabeledVector> batch,
                                     double l2) {
  if (batch.empty()) throw DataError("loss_and_grad needs a nonempty batch");
  if (l2 < 0.0) throw ConfigError("l2 must be nonnegative");
  LossAndGradient out;
  out.grad = detail::zero_gradient(p);
  std::unordered_map<std::uint32_t, std::size_t> slot;
  const double total = detail::accumulate_data_gradient(p, 1.0, batch, out.grad, slot);
  detail::sort_columns(out.grad);

  const double inv_n = 1.0 / static_cast<double>(batch.size());
  for (double& v : out.grad.column_values) v *= inv_n;
  for (double& v : out.grad.bias) v *= inv_n;
  for (double& v : out.grad.out_weights) v *= inv_n;
  for (double& v : out.grad.out_bias) v *= inv_n;
  out.grad.l2 = l2;
  out.loss = total * inv_n +
             0.5 * l2 * (detail::squared_norm(p.weights) + detail::squared_norm(p.out_weights));
  if (!std::isfinite(out.loss)) throw RuntimeError("non-finite loss");
  return out;
}

}  // namespace inoc
