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

// Text-pair examples, splits and bundles, JSON Lines I/O, and nested
// ("inclusive") subsampling.

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <numeric>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "inoc/errors.hpp"
#include "inoc/rng.hpp"
#include "json.hpp"

namespace inoc {

// Declaration order is the tie-break order used by the classifier.
enum class Label : std::uint8_t { kEntailment = 0, kNeutral = 1, kContradiction = 2 };

inline constexpr std::size_t kNumLabels = 3;
inline constexpr std::array<Label, kNumLabels> kAllLabels = {
    Label::kEntailment, Label::kNeutral, Label::kContradiction};

constexpr std::string_view label_name(Label label) {
  switch (label) {
    case Label::kEntailment:
      return "entailment";
    case Label::kNeutral:
      return "neutral";
    case Label::kContradiction:
      return "contradiction";
  }
  return "?";
}

inline std::optional<Label> parse_label(std::string_view name) {
  for (Label l : kAllLabels) {
    if (label_name(l) == name) return l;
  }
  return std::nullopt;
}

constexpr std::size_t label_index(Label label) {
  return static_cast<std::size_t>(label);
}

struct Example {
  std::string id;
  std::string premise;
  std::string hypothesis;
  Label label = Label::kEntailment;
  // Name of the transformation that produced this example, if any.
  std::optional<std::string> provenance;

  friend bool operator==(const Example&, const Example&) = default;
};

struct DatasetSplit {
  std::string name;
  std::vector<Example> examples;

  std::size_t size() const { return examples.size(); }
  bool empty() const { return examples.empty(); }

  friend bool operator==(const DatasetSplit&, const DatasetSplit&) = default;
};

struct DatasetBundle {
  DatasetSplit train;
  DatasetSplit dev;
  DatasetSplit test;

  friend bool operator==(const DatasetBundle&, const DatasetBundle&) = default;
};

namespace detail {

inline bool is_blank(std::string_view s) {
  return s.find_first_not_of(" \t\r\n\f\v") == std::string_view::npos;
}

}  // namespace detail

// Throws DataError if the example violates a field invariant.
inline void validate_example(const Example& e) {
  if (e.id.empty()) throw DataError("example has an empty id");
  if (detail::is_blank(e.premise)) {
    throw DataError("example '" + e.id + "' has a blank premise");
  }
  if (detail::is_blank(e.hypothesis)) {
    throw DataError("example '" + e.id + "' has a blank hypothesis");
  }
}

// Checks every example and id uniqueness within the split.
inline void validate_split(const DatasetSplit& split) {
  std::unordered_set<std::string_view> seen;
  seen.reserve(split.size());
  for (const Example& e : split.examples) {
    validate_example(e);
    if (!seen.insert(e.id).second) {
      throw DataError("duplicate id '" + e.id + "' in split '" + split.name +
                      "'");
    }
  }
}

// Checks each split, and that no id is shared between splits.
inline void validate_bundle(const DatasetBundle& bundle) {
  std::unordered_set<std::string_view> seen;
  for (const DatasetSplit* split : {&bundle.train, &bundle.dev, &bundle.test}) {
    validate_split(*split);
    for (const Example& e : split->examples) {
      if (!seen.insert(e.id).second) {
        throw DataError("id '" + e.id + "' appears in more than one split");
      }
    }
  }
}

inline nlohmann::ordered_json example_to_json(const Example& e) {
  nlohmann::ordered_json j;
  j["id"] = e.id;
  j["premise"] = e.premise;
  j["hypothesis"] = e.hypothesis;
  j["label"] = std::string(label_name(e.label));
  if (e.provenance) {
    j["provenance"] = *e.provenance;
  } else {
    j["provenance"] = nullptr;
  }
  return j;
}

// Parses one JSON Lines record. `where` prefixes error messages.
inline Example example_from_json(const nlohmann::json& j,
                                 const std::string& where) {
  if (!j.is_object()) throw DataError(where + ": expected a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (key != "id" && key != "premise" && key != "hypothesis" &&
        key != "label" && key != "provenance") {
      throw DataError(where + ": unknown key '" + key + "'");
    }
  }
  auto get_string = [&](const char* key) -> std::string {
    auto it = j.find(key);
    if (it == j.end()) {
      throw DataError(where + ": missing key '" + key + "'");
    }
    if (!it->is_string()) {
      throw DataError(where + ": key '" + key + "' is not a string");
    }
    return it->get<std::string>();
  };
  Example e;
  e.id = get_string("id");
  e.premise = get_string("premise");
  e.hypothesis = get_string("hypothesis");
  const std::string label = get_string("label");
  auto parsed = parse_label(label);
  if (!parsed) throw DataError(where + ": unknown label '" + label + "'");
  e.label = *parsed;
  if (auto it = j.find("provenance"); it != j.end() && !it->is_null()) {
    if (!it->is_string()) {
      throw DataError(where + ": key 'provenance' is not a string");
    }
    e.provenance = it->get<std::string>();
  }
  try {
    validate_example(e);
  } catch (const DataError& err) {
    throw DataError(where + ": " + err.what());
  }
  return e;
}

inline DatasetSplit parse_jsonl(std::istream& in, const std::string& source,
                                std::string name) {
  DatasetSplit split;
  split.name = std::move(name);
  std::unordered_set<std::string> ids;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (detail::is_blank(line)) continue;
    const std::string where = source + ":" + std::to_string(line_no);
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& err) {
      throw DataError(where + ": malformed JSON: " + err.what());
    }
    Example e = example_from_json(j, where);
    if (!ids.insert(e.id).second) {
      throw DataError(where + ": duplicate id '" + e.id + "'");
    }
    split.examples.push_back(std::move(e));
  }
  return split;
}

// Split name defaults to the file stem.
inline DatasetSplit load_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path + "' for reading");
  std::string name = path;
  if (auto slash = name.find_last_of('/'); slash != std::string::npos) {
    name = name.substr(slash + 1);
  }
  if (auto dot = name.find_last_of('.'); dot != std::string::npos) {
    name = name.substr(0, dot);
  }
  return parse_jsonl(in, path, name);
}

inline void write_jsonl(const DatasetSplit& split, std::ostream& out) {
  for (const Example& e : split.examples) {
    out << example_to_json(e).dump() << '\n';
  }
}

inline void write_jsonl(const DatasetSplit& split, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw RuntimeError("cannot open '" + path + "' for writing");
  write_jsonl(split, out);
  out.flush();
  if (!out) throw RuntimeError("write to '" + path + "' failed");
}

// Nested subsamples: one seeded permutation, then prefixes of the requested
// sizes. result[i] is a subset of result[j] for i < j.
inline std::vector<DatasetSplit> subsample_inclusive(
    const DatasetSplit& split, const std::vector<std::size_t>& sizes,
    std::uint64_t seed) {
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    if (i > 0 && sizes[i] <= sizes[i - 1]) {
      throw ConfigError("subsample sizes must be strictly ascending");
    }
    if (sizes[i] > split.size()) {
      throw ConfigError("subsample size " + std::to_string(sizes[i]) +
                        " exceeds split size " + std::to_string(split.size()));
    }
  }
  std::vector<std::size_t> order(split.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(derive_seed(seed, "subsample_inclusive"));
  rng.shuffle(std::span<std::size_t>(order));

  std::vector<DatasetSplit> result;
  result.reserve(sizes.size());
  for (std::size_t n : sizes) {
    DatasetSplit sub;
    sub.name = split.name + "_" + std::to_string(n);
    sub.examples.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
      sub.examples.push_back(split.examples[order[i]]);
    }
    result.push_back(std::move(sub));
  }
  return result;
}

using LabelHistogram = std::array<std::size_t, kNumLabels>;

inline LabelHistogram label_histogram(const DatasetSplit& split) {
  LabelHistogram counts{};
  for (const Example& e : split.examples) ++counts[label_index(e.label)];
  return counts;
}

}  // namespace inoc
