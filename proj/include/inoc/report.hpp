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

#pragma once

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "inoc/errors.hpp"
#include "inoc/outcomes.hpp"
#include "inoc/report_types.hpp"
#include "inoc/rng.hpp"
#include "json.hpp"

namespace inoc {

// 16 hex digits of FNV-1a.
inline std::string digest(std::string_view bytes) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(bytes)));
  return buf;
}

// Digest of the compact dump. Stable because callers build ordered_json in a
// fixed key order.
inline std::string digest(const nlohmann::ordered_json& j) {
  const std::string text = j.dump();
  return digest(std::string_view(text));
}

struct CurveRow {
  std::size_t size = 0;
  double best_lr = 0.0;
  double original_acc = 0.0;
  double challenge_acc = 0.0;
  std::optional<double> gap_closure;  // empty when the gap is not positive
};

struct CurveTable {
  std::string original_name;
  std::string challenge_name;
  std::string model_digest;
  std::string plan_digest;
  std::vector<CurveRow> rows;
};

inline CurveTable curve_table(const InoculationReport& r) {
  CurveTable t;
  t.challenge_name = r.challenge_name;
  const bool has_gap = performance_gap(r) > 0.0;
  for (const InoculationPoint& p : r.points) {
    CurveRow row{p.size, p.best_lr, p.original_test_acc, p.challenge_test_acc, std::nullopt};
    if (has_gap) row.gap_closure = gap_closure(r, p);
    t.rows.push_back(row);
  }
  return t;
}

inline constexpr const char* kCsvHeader = "size,best_lr,original_acc,challenge_acc,gap_closure";

namespace detail {

inline std::string fixed6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

inline std::string shortest(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace detail

// Numeric fields never need quoting, so every row is valid RFC-4180 as is.
// Lines end in CRLF as the RFC specifies.
inline void emit_csv(const InoculationReport& r, std::ostream& out) {
  out << kCsvHeader << "\r\n";
  for (const CurveRow& row : curve_table(r).rows) {
    out << row.size << ',' << detail::shortest(row.best_lr) << ','
        << detail::fixed6(row.original_acc) << ',' << detail::fixed6(row.challenge_acc) << ','
        << (row.gap_closure ? detail::fixed6(*row.gap_closure) : std::string()) << "\r\n";
  }
}

inline void emit_csv(const InoculationReport& r, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw RuntimeError("cannot open '" + path + "' for writing");
  emit_csv(r, out);
  if (!out) throw RuntimeError("write to '" + path + "' failed");
}

struct SummaryRow {
  std::string challenge;
  double gap = 0.0;
  std::optional<double> max_closure;
  double max_drop = 0.0;
  std::string outcome;
};

inline SummaryRow summary_row(const InoculationReport& r) {
  SummaryRow row;
  row.challenge = r.challenge_name;
  row.gap = performance_gap(r);
  double drop = 0.0;
  for (std::size_t i = 0; i < r.points.size(); ++i) {
    const double d = original_drop(r, r.points[i]);
    drop = i == 0 ? d : std::max(drop, d);
  }
  row.max_drop = drop;
  if (row.gap > 0.0) {
    for (const InoculationPoint& p : r.points) {
      const double c = gap_closure(r, p);
      if (!row.max_closure || c > *row.max_closure) row.max_closure = c;
    }
  }
  row.outcome = r.outcome ? std::string(outcome_name(r.outcome->kind)) : "undefined_gap";
  return row;
}

// Aligned plain-text table, one row per report.
inline std::string summarize(const std::vector<InoculationReport>& reports) {
  std::vector<std::vector<std::string>> cells = {
      {"challenge", "pre_gap", "max_closure", "max_drop", "outcome"}};
  for (const InoculationReport& r : reports) {
    const SummaryRow row = summary_row(r);
    cells.push_back({row.challenge, detail::fixed6(row.gap),
                     row.max_closure ? detail::fixed6(*row.max_closure) : "-",
                     detail::fixed6(row.max_drop), row.outcome});
  }
  std::vector<std::size_t> widths(cells[0].size(), 0);
  for (const auto& line : cells) {
    for (std::size_t c = 0; c < line.size(); ++c) widths[c] = std::max(widths[c], line[c].size());
  }
  std::ostringstream out;
  for (const auto& line : cells) {
    std::string text;
    for (std::size_t c = 0; c < line.size(); ++c) {
      if (c > 0) text += "  ";
      text += line[c];
      if (c + 1 < line.size()) text.append(widths[c] - line[c].size(), ' ');
    }
    out << text << '\n';
  }
  return out.str();
}

inline nlohmann::ordered_json outcome_to_json(const Outcome& o) {
  nlohmann::ordered_json j;
  j["kind"] = std::string(outcome_name(o.kind));
  j["evidence"] = {{"max_gap_closure", o.evidence.max_gap_closure},
                   {"max_original_drop", o.evidence.max_original_drop},
                   {"at_size", o.evidence.at_size}};
  return j;
}

// `metadata` is copied verbatim under "metadata" (digests, names, configs).
inline nlohmann::ordered_json report_to_json(const InoculationReport& r,
                                             const nlohmann::ordered_json& metadata = {}) {
  nlohmann::ordered_json j;
  if (!metadata.is_null()) j["metadata"] = metadata;
  j["challenge"] = r.challenge_name;
  j["pre_original_acc"] = r.pre_original_acc;
  j["pre_challenge_acc"] = r.pre_challenge_acc;
  j["performance_gap"] = performance_gap(r);
  j["selection"] = {{"primary", "challenge_test"}, {"secondary", "challenge_dev"}};
  nlohmann::ordered_json points = nlohmann::ordered_json::array();
  for (const InoculationPoint& p : r.points) {
    nlohmann::ordered_json pj;
    pj["size"] = p.size;
    pj["best_lr"] = p.best_lr;
    pj["original_test_acc"] = p.original_test_acc;
    pj["challenge_test_acc"] = p.challenge_test_acc;
    if (performance_gap(r) > 0.0) {
      pj["gap_closure"] = gap_closure(r, p);
    } else {
      pj["gap_closure"] = nullptr;
    }
    pj["history_ref"] = p.history_ref;
    if (p.dev_selected) {
      pj["dev_selected"] = {{"lr", p.dev_selected->lr},
                            {"original_test_acc", p.dev_selected->original_test_acc},
                            {"challenge_test_acc", p.dev_selected->challenge_test_acc}};
    } else {
      pj["dev_selected"] = nullptr;
    }
    points.push_back(std::move(pj));
  }
  j["points"] = std::move(points);
  nlohmann::ordered_json runs = nlohmann::ordered_json::array();
  for (const RunRecord& run : r.runs) {
    nlohmann::ordered_json rj;
    rj["size"] = run.size;
    rj["lr"] = run.lr;
    rj["epochs"] = run.epochs;
    rj["selected_epoch"] = run.selected_epoch;
    rj["original_test_acc"] = run.original_test_acc;
    rj["challenge_test_acc"] = run.challenge_test_acc;
    if (run.challenge_dev_acc) {
      rj["challenge_dev_acc"] = *run.challenge_dev_acc;
    } else {
      rj["challenge_dev_acc"] = nullptr;
    }
    rj["history_ref"] = run.history_ref;
    runs.push_back(std::move(rj));
  }
  j["runs"] = std::move(runs);
  if (r.outcome) {
    j["outcome"] = outcome_to_json(*r.outcome);
  } else {
    j["outcome"] = nullptr;
  }
  return j;
}

}  // namespace inoc
