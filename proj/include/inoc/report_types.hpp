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

// Data types shared by the inoculation sweep, outcome classification and
// reporting.

#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "inoc/errors.hpp"

namespace inoc {

enum class OutcomeKind {
  kDatasetWeakness,     // gap closes, original performance kept
  kModelWeakness,       // nothing changes
  kDistributionShift,   // original performance damaged
  kIntermediate,
};

constexpr std::string_view outcome_name(OutcomeKind kind) {
  switch (kind) {
    case OutcomeKind::kDatasetWeakness:
      return "outcome1_dataset_weakness";
    case OutcomeKind::kModelWeakness:
      return "outcome2_model_weakness";
    case OutcomeKind::kDistributionShift:
      return "outcome3_distribution_shift";
    case OutcomeKind::kIntermediate:
      return "intermediate";
  }
  return "?";
}

struct OutcomeEvidence {
  double max_gap_closure = 0.0;
  double max_original_drop = 0.0;
  std::size_t at_size = 0;  // size of the point with maximal closure
};

struct Outcome {
  OutcomeKind kind = OutcomeKind::kIntermediate;
  OutcomeEvidence evidence;
};

struct OutcomeThresholds {
  double close_frac = 0.90;
  double unchanged_frac = 0.20;
  double damage_drop = 0.05;

  void validate() const {
    if (!(unchanged_frac > 0.0 && unchanged_frac < close_frac && close_frac <= 1.0)) {
      throw ConfigError("thresholds need 0 < unchanged_frac < close_frac <= 1");
    }
    if (!(damage_drop > 0.0)) throw ConfigError("damage_drop must be positive");
  }
};

// One fine-tuning run of the sweep.
struct RunRecord {
  std::size_t size = 0;
  double lr = 0.0;
  std::size_t epochs = 0;          // epochs actually trained
  std::size_t selected_epoch = 0;  // 0 when the base model was returned
  double original_test_acc = 0.0;
  double challenge_test_acc = 0.0;
  std::optional<double> challenge_dev_acc;
  std::string history_ref;         // run log path relative to the run directory
};

// Learning rate chosen on challenge development accuracy instead of
// challenge test accuracy.
struct DevSelection {
  double lr = 0.0;
  double original_test_acc = 0.0;
  double challenge_test_acc = 0.0;
};

struct InoculationPoint {
  std::size_t size = 0;
  double best_lr = 0.0;
  double original_test_acc = 0.0;
  double challenge_test_acc = 0.0;
  std::string history_ref;
  std::optional<DevSelection> dev_selected;
};

struct InoculationReport {
  std::string challenge_name;
  double pre_original_acc = 0.0;
  double pre_challenge_acc = 0.0;
  std::vector<InoculationPoint> points;  // ascending size
  std::vector<RunRecord> runs;           // size-major, lr-grid order
  // Absent when the performance gap is not positive.
  std::optional<Outcome> outcome;
};

}  // namespace inoc
