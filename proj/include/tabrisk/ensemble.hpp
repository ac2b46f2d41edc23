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

#ifndef TABRISK_ENSEMBLE_HPP_
#define TABRISK_ENSEMBLE_HPP_

#include <filesystem>
#include <span>
#include <vector>

#include "json.hpp"
#include "tabrisk/metrics.hpp"
#include "tabrisk/nn.hpp"
#include "tabrisk/scaler.hpp"
#include "tabrisk/schema.hpp"

namespace tabrisk {

struct VotingWeights {
  std::vector<double> alphas;
  // Set when no member cleared the gate and uniform weights were substituted.
  bool fallback = false;
};

// alpha_i = F1_i if F1_i > gate (strict) else 0. When every alpha is zero the
// weights fall back to 1/k and the fallback flag is raised.
VotingWeights AssignVotingWeights(std::span<const double> val_f1s, double gate);

// Fold models combined by F1-gated weighted voting. Inputs are raw-unit
// encoded vectors; the stored scaler is applied before the members run.
struct EnsembleModel {
  std::vector<MlpModel> members;
  std::vector<double> alphas;
  bool fallback = false;
  ScalerParams scaler;
  SchemaPtr schema;
  double threshold = 0.5;
  double gate = 0.7;
  nlohmann::json training_info = nlohmann::json::object();

  // Throws InvalidArgument when sizes disagree or weights are invalid.
  void Validate() const;

  std::vector<double> MemberProbabilities(std::span<const double> raw) const;
  // sum(alpha_i f_i(x)) / sum(alpha_i).
  double PredictProba(std::span<const double> raw) const;
  int Predict(std::span<const double> raw) const { return Classify(PredictProba(raw), threshold); }
  // Matrix-product evaluation of many raw rows for throughput-bound callers
  // (attribution). Agrees with PredictProba up to rounding; decisions that
  // must be reproducible use PredictProba.
  std::vector<double> PredictProbaBatch(const RowMatrix& raw) const;

  nlohmann::json ToJson() const;
  static EnsembleModel FromJson(const nlohmann::json& j);
  void Save(const std::filesystem::path& path) const;
  static EnsembleModel Load(const std::filesystem::path& path);
};

EnsembleModel BuildEnsemble(std::vector<FoldResult> folds, ScalerParams scaler, SchemaPtr schema,
                            double gate = 0.7, double threshold = 0.5);

}  // namespace tabrisk

#endif  // TABRISK_ENSEMBLE_HPP_
