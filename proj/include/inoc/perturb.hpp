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

// Label-preserving stress transformations and challenge-bundle assembly.

#pragma once

#include <array>
#include <cctype>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_set>
#include <utility>
#include <vector>

#include "inoc/corpus.hpp"
#include "inoc/errors.hpp"
#include "inoc/rng.hpp"
#include "inoc/text.hpp"

namespace inoc {

enum class TransformKind {
  kWordOverlap,
  kNegation,
  kSpellingError,
  kLengthMismatch,
  kDistractor,
};

inline constexpr std::array<TransformKind, 5> kAllTransformKinds = {
    TransformKind::kWordOverlap, TransformKind::kNegation,
    TransformKind::kSpellingError, TransformKind::kLengthMismatch,
    TransformKind::kDistractor};

constexpr std::string_view transform_name(TransformKind kind) {
  switch (kind) {
    case TransformKind::kWordOverlap:
      return "word_overlap";
    case TransformKind::kNegation:
      return "negation";
    case TransformKind::kSpellingError:
      return "spelling_error";
    case TransformKind::kLengthMismatch:
      return "length_mismatch";
    case TransformKind::kDistractor:
      return "distractor";
  }
  return "?";
}

inline std::optional<TransformKind> parse_transform(std::string_view name) {
  for (TransformKind k : kAllTransformKinds) {
    if (transform_name(k) == name) return k;
  }
  return std::nullopt;
}

inline constexpr std::string_view kTrueTautology = "and true is true";
inline constexpr std::string_view kFalseTautology = "and false is not true";
inline constexpr int kLengthMismatchRepeats = 5;

// Thrown when a stochastic transformation has nothing it can change.
class UntransformableError : public DataError {
 public:
  using DataError::DataError;
};

struct Transformation {
  TransformKind kind;
  std::uint64_t seed = 0;  // spelling_error and distractor only
  std::size_t vocab_size = 5000;  // distractor replacement words
};

namespace detail {

// Byte range [begin, end) of the alphanumeric core of a word.
inline std::pair<std::size_t, std::size_t> word_core(std::string_view word) {
  auto alnum = [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) != 0;
  };
  std::size_t b = 0;
  std::size_t e = word.size();
  while (b < e && !alnum(word[b])) ++b;
  while (e > b && !alnum(word[e - 1])) --e;
  return {b, e};
}

// Swap positions i, i+1 within a core of length n. Both positions are
// interior when n >= 4; a three-letter core swaps its last two characters.
// Swaps of equal characters are skipped so the edit is always visible.
inline std::vector<std::size_t> swap_positions(std::string_view core) {
  std::vector<std::size_t> out;
  const std::size_t n = core.size();
  if (n < 3) return out;
  const std::size_t first = 1;
  const std::size_t last = n >= 4 ? n - 3 : 1;
  for (std::size_t i = first; i <= last; ++i) {
    if (core[i] != core[i + 1]) out.push_back(i);
  }
  return out;
}

inline std::string misspell(std::string_view hypothesis, Rng& rng) {
  std::vector<std::string_view> words = split_words(hypothesis);
  struct Candidate {
    std::size_t word;
    std::vector<std::size_t> swaps;
  };
  std::vector<Candidate> candidates;
  for (std::size_t w = 0; w < words.size(); ++w) {
    auto [b, e] = word_core(words[w]);
    auto swaps = swap_positions(words[w].substr(b, e - b));
    if (!swaps.empty()) candidates.push_back({w, std::move(swaps)});
  }
  if (candidates.empty()) {
    throw UntransformableError("hypothesis has no word of length >= 3 to misspell");
  }
  const Candidate& pick = candidates[rng.below(candidates.size())];
  const std::size_t i = pick.swaps[rng.below(pick.swaps.size())];

  // Rebuild the hypothesis in place so all other bytes are untouched.
  const std::string_view target = words[pick.word];
  const auto offset = static_cast<std::size_t>(target.data() - hypothesis.data());
  const std::size_t core_begin = word_core(target).first;
  std::string out(hypothesis);
  std::swap(out[offset + core_begin + i], out[offset + core_begin + i + 1]);
  return out;
}

inline std::string distractor_sentence(std::string_view hypothesis,
                                       std::size_t vocab_size, Rng& rng) {
  std::vector<std::string> tokens = tokenize(hypothesis);
  if (tokens.size() < 2) {
    throw UntransformableError("hypothesis too short to build a distractor");
  }
  std::unordered_set<std::string> present(tokens.begin(), tokens.end());
  const std::size_t key = rng.below(tokens.size());
  std::string replacement;
  do {
    replacement = "w" + std::to_string(rng.below(vocab_size));
  } while (present.count(replacement));
  tokens[key] = replacement;
  std::string sentence = join_words(tokens);
  sentence.front() = static_cast<char>(
      std::toupper(static_cast<unsigned char>(sentence.front())));
  return sentence + ".";
}

inline bool ends_sentence(std::string_view text) {
  while (!text.empty() && is_space(text.back())) text.remove_suffix(1);
  return !text.empty() &&
         (text.back() == '.' || text.back() == '!' || text.back() == '?');
}

}  // namespace detail

// Label and id are preserved; provenance becomes the kind name.
inline Example apply(const Transformation& t, const Example& e) {
  Example out = e;
  out.provenance = std::string(transform_name(t.kind));
  Rng rng(derive_seed(t.seed, std::string(transform_name(t.kind)) + "/" + e.id));
  switch (t.kind) {
    case TransformKind::kWordOverlap:
      out.hypothesis += " ";
      out.hypothesis += kTrueTautology;
      break;
    case TransformKind::kNegation:
      out.hypothesis += " ";
      out.hypothesis += kFalseTautology;
      break;
    case TransformKind::kLengthMismatch:
      for (int i = 0; i < kLengthMismatchRepeats; ++i) {
        out.premise += " ";
        out.premise += kTrueTautology;
      }
      break;
    case TransformKind::kSpellingError:
      out.hypothesis = detail::misspell(e.hypothesis, rng);
      break;
    case TransformKind::kDistractor: {
      // The distractor is always the last sentence of the passage.
      if (!detail::ends_sentence(out.premise)) out.premise += ".";
      out.premise += " ";
      out.premise += detail::distractor_sentence(e.hypothesis, t.vocab_size, rng);
      break;
    }
  }
  return out;
}

inline DatasetSplit apply(const Transformation& t, const DatasetSplit& split) {
  DatasetSplit out;
  out.name = split.name;
  out.examples.reserve(split.size());
  for (const Example& e : split.examples) out.examples.push_back(apply(t, e));
  return out;
}

// Transforms every split. The challenge train split is the first
// `train_size` examples of a seeded permutation of the transformed source
// train split, i.e. the pool later subsampled inclusively.
inline DatasetBundle make_challenge_bundle(const DatasetBundle& source,
                                           const Transformation& t,
                                           std::size_t train_size,
                                           std::uint64_t seed) {
  if (train_size > source.train.size()) {
    throw ConfigError("source train split has " +
                      std::to_string(source.train.size()) +
                      " examples; challenge train needs " +
                      std::to_string(train_size));
  }
  DatasetBundle out;
  out.train = subsample_inclusive(apply(t, source.train), {train_size}, seed)[0];
  out.train.name = "train";
  out.dev = apply(t, source.dev);
  out.test = apply(t, source.test);
  return out;
}

}  // namespace inoc
