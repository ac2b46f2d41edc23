/*
 * Copyright 2026 The tabrisk Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef TABRISK_EXPERIMENT_HPP_
#define TABRISK_EXPERIMENT_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "tabrisk/augment.hpp"
#include "tabrisk/dataset.hpp"
#include "tabrisk/explain.hpp"
#include "tabrisk/metrics.hpp"
#include "tabrisk/nn.hpp"

namespace tabrisk {

enum class Pipeline { kAimenCtgan, kRAimenNegative, kRAimenBoth, kAimenAdasyn, kNoAugment };

std::string ToString(Pipeline p);
Pipeline ParsePipeline(const std::string& s);

// Neighbor pool for counterfactuals: the real training records, or the
// augmented training set including synthetic records.
enum class CePool { kRealTrain, kAugmentedTrain };

struct ExperimentConfig {
  Pipeline pipeline = Pipeline::kAimenCtgan;
  Backbone backbone = Backbone::kV5;
  AugmentConfig augment;  // method and restriction are set by the pipeline
  GanConfig gan;
  TrainConfig train;
  std::size_t n_repetitions = 5;
  std::uint64_t base_seed = 0;
  std::size_t test_per_class = 19;
  double gate = 0.7;
  double threshold = 0.5;
  CePool ce_pool = CePool::kRealTrain;
  std::size_t ce_small_budget = 5;

  // augment with the pipeline's method and restriction applied.
  AugmentConfig EffectiveAugment() const;
  void Validate() const;
  nlohmann::json ToJson() const;
  // Missing keys keep their defaults.
  static ExperimentConfig FromJson(const nlohmann::json& j);
  static ExperimentConfig Load(const std::filesystem::path& path);
};

// Exact-vector check that no test record reaches augmentation or training.
// A training record equal to a test record is tolerated only when it is a
// distinct real source row carrying the same vector (a duplicate in the
// source data, not a leak).
struct PurityAudit {
  std::size_t test_records = 0;
  std::size_t augmentation_inputs_checked = 0;
  std::size_t training_records_checked = 0;
  std::size_t source_duplicates = 0;
  std::size_t violations = 0;
  bool disjoint_rows = false;

  bool passed() const { return disjoint_rows && violations == 0; }
  nlohmann::json ToJson() const;
};

PurityAudit AuditTestPurity(const BalancedSplit& split, const Dataset& augmentation_input,
                            const Dataset& training_set);

struct RepetitionResult {
  std::size_t index = 0;
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;

  MetricsReport train;  // ensemble on the (augmented) training set
  MetricsReport val;    // pooled out-of-fold predictions of the fold models
  MetricsReport test;   // ensemble on the real held-out test set
  DistributionGapReport gap;
  double best_val_loss = 0.0;
  std::vector<double> fold_val_f1;
  std::vector<double> alphas;
  bool voting_fallback = false;
  std::optional<AugmentReport> augment;
  std::optional<CeReport> ce_full;   // max_changes = d
  std::optional<CeReport> ce_small;  // max_changes = ce_small_budget
  std::size_t ce_candidates = 0;     // abnormal-classified test cases
  bool ce_round_trip = true;         // every flipped CE re-classifies opposite
  PurityAudit purity;
  std::size_t train_positive = 0;
  std::size_t train_negative = 0;
  bool class_imbalance = false;

  nlohmann::json ToJson() const;
};

struct ExperimentResult {
  ExperimentConfig config;
  std::vector<RepetitionResult> repetitions;

  std::size_t completed() const;
  // Means and population standard deviations over completed repetitions,
  // mirroring the table columns (loss, accuracy, sensitivity, specificity,
  // F1+, F1-, average F1; best validation loss, L_val, L_test, gap %).
  nlohmann::json Aggregate() const;
};

// Runs every repetition (seed base_seed + r). When out_dir is non-empty every
// artifact is written under it: config.json, rep_<r>/..., aggregate.json.
// A failing repetition is recorded and the run continues; throws Error when
// every repetition failed. Per-repetition seeds for the split, augmentation,
// GAN and training are all derived from base_seed + r; the seed fields of the
// nested configs are not used. log, when set, receives progress lines.
ExperimentResult RunExperiment(const ExperimentConfig& config, const Dataset& data,
                               const std::filesystem::path& out_dir = {},
                               const std::function<void(const std::string&)>& log = {});

// Aggregates the stored gap.json of every repetition of a run directory.
nlohmann::json GapReportFromRunDir(const std::filesystem::path& run_dir);

}  // namespace tabrisk

#endif  // TABRISK_EXPERIMENT_HPP_
