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

#include <cmath>
#include <cstddef>

#include "inoc/errors.hpp"
#include "inoc/report_types.hpp"

namespace inoc {

// Pre-inoculation original accuracy minus challenge accuracy. May be
// negative.
inline double performance_gap(const InoculationReport& r) {
  return r.pre_original_acc - r.pre_challenge_acc;
}

// Fraction of the gap recovered at point p.
inline double gap_closure(const InoculationReport& r, const InoculationPoint& p) {
  const double gap = performance_gap(r);
  if (!(gap > 0.0)) throw DataError("gap closure is undefined for a non-positive gap");
  return (p.challenge_test_acc - r.pre_challenge_acc) / gap;
}

inline double original_drop(const InoculationReport& r, const InoculationPoint& p) {
  return r.pre_original_acc - p.original_test_acc;
}

// Rules, first match wins:
//   3  every point with closure >= close_frac drops more than damage_drop
//      (at least one such point), or the max-closure point does;
//   1  some point has closure >= close_frac and drop <= damage_drop;
//   2  max closure < unchanged_frac and every |drop| <= damage_drop;
//   otherwise intermediate.
inline Outcome classify(const InoculationReport& r, const OutcomeThresholds& th = {}) {
  th.validate();
  if (!(performance_gap(r) > 0.0)) {
    throw DataError("cannot classify a report without a positive performance gap");
  }
  Outcome out;
  if (r.points.empty()) {
    out.kind = OutcomeKind::kModelWeakness;
    return out;
  }

  const InoculationPoint* best = nullptr;
  double best_closure = 0.0;
  double max_drop = -INFINITY;
  double max_abs_drop = 0.0;
  std::size_t closing = 0;
  std::size_t closing_damaged = 0;
  bool closes_cleanly = false;
  for (const InoculationPoint& p : r.points) {
    const double c = gap_closure(r, p);
    const double d = original_drop(r, p);
    if (best == nullptr || c > best_closure) {
      best = &p;
      best_closure = c;
    }
    max_drop = std::max(max_drop, d);
    max_abs_drop = std::max(max_abs_drop, std::fabs(d));
    if (c >= th.close_frac) {
      ++closing;
      if (d > th.damage_drop) {
        ++closing_damaged;
      } else {
        closes_cleanly = true;
      }
    }
  }
  out.evidence = {best_closure, max_drop, best->size};

  const bool damaged = (closing > 0 && closing_damaged == closing) ||
                       original_drop(r, *best) > th.damage_drop;
  if (damaged) {
    out.kind = OutcomeKind::kDistributionShift;
  } else if (closes_cleanly) {
    out.kind = OutcomeKind::kDatasetWeakness;
  } else if (best_closure < th.unchanged_frac && max_abs_drop <= th.damage_drop) {
    out.kind = OutcomeKind::kModelWeakness;
  } else {
    out.kind = OutcomeKind::kIntermediate;
  }
  return out;
}

}  // namespace inoc
