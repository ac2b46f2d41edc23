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

#ifndef TABRISK_BENCHMARK_DATA_HPP_
#define TABRISK_BENCHMARK_DATA_HPP_

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "tabrisk/dataset.hpp"

namespace tabrisk {

// Noisy linear threshold: score(x) = sum_j w_j * u_j(x) + N(0, noise_sd),
// where u_j is the slot value normalized by the schema range for numerics and
// the raw 0/1 value otherwise. The n_positive highest noisy scores are
// labeled 1.
struct LabelRule {
  std::vector<std::pair<std::string, double>> weights;  // slot name -> weight
  double noise_sd = 0.5;

  // Noise-free additive score. Throws InvalidArgument if a weighted slot is
  // not in the schema.
  double Score(const FeatureSchema& schema, std::span<const double> x) const;
  // Per-slot coefficients a and offset c so that Score(x) = a . x + c on raw
  // encoded values.
  std::pair<std::vector<double>, double> RawCoefficients(const FeatureSchema& schema) const;

  static LabelRule Default();
  nlohmann::json ToJson() const;
};

struct BenchmarkConfig {
  std::size_t n_total = 1457;
  std::size_t n_positive = 112;
  std::uint64_t seed = 7;
  LabelRule label_rule = LabelRule::Default();
};

// Synthetic stand-in for the clinical cohort. Numerics are drawn from clamped
// normals inside the schema ranges (rounded when integer-valued), binaries
// from fixed prevalences, categoricals uniformly. Records are unique.
// Deterministic per seed.
Dataset GenerateBenchmarkDataset(const BenchmarkConfig& config, SchemaPtr schema);

}  // namespace tabrisk

#endif  // TABRISK_BENCHMARK_DATA_HPP_
