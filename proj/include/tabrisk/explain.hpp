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

#ifndef TABRISK_EXPLAIN_HPP_
#define TABRISK_EXPLAIN_HPP_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "tabrisk/dataset.hpp"
#include "tabrisk/ensemble.hpp"
#include "tabrisk/scaler.hpp"

namespace tabrisk {

// One accepted move of the greedy search: the features copied from the
// neighbor and the model probability afterwards.
struct CounterfactualStep {
  std::vector<std::string> features;
  double probability = 0.0;
};

struct Counterfactual {
  CaseRecord original;
  CaseRecord counterfactual;
  std::vector<std::string> changed_features;
  double distance = 0.0;  // Euclidean, model-scaled space
  double original_prob = 0.0;
  double counterfactual_prob = 0.0;
  bool flipped = false;
  std::size_t neighbor_index = 0;  // pool row the values were copied from
  std::vector<CounterfactualStep> trace;

  std::size_t sparsity() const { return changed_features.size(); }
  // Original and counterfactual as raw-unit feature maps.
  nlohmann::json ToJson(const FeatureSchema& schema) const;
};

struct CeReport {
  std::size_t n_cases = 0;
  std::size_t max_changes = 0;
  double accuracy = 0.0;
  double distance_mean = 0.0;
  double distance_std = 0.0;  // population
  double sparsity_mean = 0.0;
  double sparsity_std = 0.0;  // population

  nlohmann::json ToJson() const;
};

// Decoded features (a one-hot block counts once) on which a and b differ.
std::vector<std::size_t> DifferingFeatures(const FeatureSchema& schema, std::span<const double> a,
                                           std::span<const double> b);

// Nearest-instance counterfactual search over a fixed pool. The pool is
// classified once by the model; the neighbor of a case is the closest pool
// record (model-scaled Euclidean, ties to the lower row) that the model puts
// in the other class.
class CounterfactualSearch {
 public:
  CounterfactualSearch(const EnsembleModel& model, Dataset pool);

  const Dataset& pool() const { return pool_; }
  const std::vector<int>& pool_classes() const { return pool_classes_; }

  // Throws InvalidArgument when the model puts no pool record in the other
  // class.
  std::size_t NearestUnlikeNeighbor(std::span<const double> x) const;

  // Copies one feature at a time from the neighbor, always the one moving
  // the probability furthest toward the other class, until the class flips
  // or max_changes features differ from x. When no single copy makes strict
  // progress, every remaining differing feature is copied in one step if the
  // budget allows (the neighbor itself is on the other side).
  Counterfactual Generate(const CaseRecord& x, std::size_t max_changes) const;

 private:
  const EnsembleModel& model_;
  Dataset pool_;
  RowMatrix pool_scaled_;
  std::vector<int> pool_classes_;
};

std::size_t NearestUnlikeNeighbor(const CaseRecord& x, const Dataset& pool,
                                  const EnsembleModel& model);
Counterfactual GenerateCounterfactual(const CaseRecord& x, const EnsembleModel& model,
                                      const Dataset& pool, std::size_t max_changes);

// Accuracy is the flipped fraction. Throws InvalidArgument when empty.
CeReport SummarizeCounterfactuals(std::span<const Counterfactual> cfs, std::size_t max_changes);
CeReport EvaluateCounterfactuals(std::span<const CaseRecord> cases, const EnsembleModel& model,
                                 const Dataset& pool, std::size_t max_changes,
                                 std::vector<Counterfactual>* out = nullptr);

struct Attribution {
  std::vector<std::string> features;
  std::vector<double> values;
  std::vector<double> std_errors;  // Monte-Carlo standard error per feature
  double baseline = 0.0;           // mean model output over the background
  double prediction = 0.0;         // model output at x
  std::size_t n_samples = 0;

  // sum(values) - (prediction - baseline).
  double EfficiencyResidual() const;
  nlohmann::json ToJson() const;
  void WriteCsv(std::ostream& out) const;
};

// Scores every row of a raw-unit matrix.
using BatchScoreFn = std::function<std::vector<double>(const RowMatrix&)>;

// Permutation-sampling Shapley estimate over decoded features. Each sample
// draws a feature order and a background record (background rows are used
// in reshuffled cycles, so every row is drawn once before any repeats) and
// walks the order switching features from the background value to x's.
Attribution ShapleyAttribution(const BatchScoreFn& f, const FeatureSchema& schema,
                               std::span<const double> x, const Dataset& background,
                               std::size_t n_samples, std::uint64_t seed);
// Same on the ensemble probability.
Attribution ShapleyAttribution(const EnsembleModel& model, std::span<const double> x,
                               const Dataset& background, std::size_t n_samples,
                               std::uint64_t seed);

}  // namespace tabrisk

#endif  // TABRISK_EXPLAIN_HPP_
