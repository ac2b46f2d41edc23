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

#include "tabrisk/benchmark_data.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>

#include "tabrisk/errors.hpp"
#include "tabrisk/rng.hpp"

namespace tabrisk {

namespace {

struct NumericPrior {
  double mean;
  double sd;
};

// Cohort means and standard deviations for the known numeric factors.
const std::map<std::string, NumericPrior>& NumericPriors() {
  static const std::map<std::string, NumericPrior> priors{
      {"maternal_age", {27.9, 5.9}},
      {"gestational_age", {38.6, 1.8}},
      {"labor_duration", {13.4, 8.2}},
      {"fetal_weight", {3248.0, 553.0}},
      {"parity", {1.3, 1.4}},
  };
  return priors;
}

const std::map<std::string, double>& BinaryPrevalence() {
  static const std::map<std::string, double> p{
      {"diabetes", 0.08},
      {"hypertension", 0.10},
      {"high_cholesterol", 0.05},
      {"obesity", 0.22},
      {"smoking", 0.12},
      {"substance_use", 0.06},
      {"maternal_infection", 0.09},
      {"anemia", 0.14},
      {"thyroid_disease", 0.05},
      {"asthma", 0.09},
      {"preeclampsia", 0.07},
      {"prior_cesarean", 0.15},
      {"multiple_gestation", 0.03},
      {"oligohydramnios", 0.05},
      {"polyhydramnios", 0.03},
      {"placental_abruption", 0.02},
      {"prolonged_rupture_of_membranes", 0.10},
      {"chorioamnionitis", 0.06},
      {"fetal_growth_restriction", 0.07},
      {"suspected_macrosomia", 0.08},
      {"breech_presentation", 0.04},
      {"meconium_stained_fluid", 0.12},
      {"abnormal_fhr", 0.18},
      {"abnormal_decelerations", 0.22},
      {"absent_accelerations", 0.20},
      {"abnormal_variability", 0.15},
      {"excessive_uterine_activity", 0.10},
      {"cesarean_section", 0.30},
      {"induction_of_labor", 0.25},
  };
  return p;
}

std::size_t SlotIndex(const FeatureSchema& schema, const std::string& name) {
  for (std::size_t s = 0; s < schema.width(); ++s) {
    if (schema.SlotName(s) == name) return s;
  }
  throw InvalidArgument("label rule references unknown slot '" + name + "'");
}

}  // namespace

LabelRule LabelRule::Default() {
  LabelRule rule;
  rule.weights = {
      {"abnormal_fhr", 2.0},          {"abnormal_decelerations", 1.6},
      {"absent_accelerations", 1.2},  {"abnormal_variability", 1.2},
      {"cesarean_section", 0.8},      {"parity", -3.0},
  };
  rule.noise_sd = 0.5;
  return rule;
}

nlohmann::json LabelRule::ToJson() const {
  nlohmann::json w = nlohmann::json::object();
  for (const auto& [name, weight] : weights) w[name] = weight;
  return {{"weights", w}, {"noise_sd", noise_sd}};
}

std::pair<std::vector<double>, double> LabelRule::RawCoefficients(
    const FeatureSchema& schema) const {
  std::vector<double> a(schema.width(), 0.0);
  double c = 0.0;
  for (const auto& [name, w] : weights) {
    const std::size_t slot = SlotIndex(schema, name);
    const FeatureSpec& f = schema.feature(schema.FeatureOfSlot(slot));
    if (f.kind == FeatureKind::kNumeric) {
      const double range = f.max - f.min;
      a[slot] += w / range;
      c -= w * f.min / range;
    } else {
      a[slot] += w;
    }
  }
  return {a, c};
}

double LabelRule::Score(const FeatureSchema& schema, std::span<const double> x) const {
  const auto [a, c] = RawCoefficients(schema);
  double s = c;
  for (std::size_t j = 0; j < a.size(); ++j) s += a[j] * x[j];
  return s;
}

Dataset GenerateBenchmarkDataset(const BenchmarkConfig& config, SchemaPtr schema) {
  if (config.n_positive == 0 || config.n_positive >= config.n_total) {
    throw InvalidArgument("benchmark config needs 0 < n_positive < n_total");
  }
  if (config.label_rule.noise_sd < 0.0) throw InvalidArgument("noise_sd must be non-negative");
  const FeatureSchema& sc = *schema;
  // Validates the rule against the schema before drawing anything.
  config.label_rule.RawCoefficients(sc);

  Rng rng(config.seed);
  std::vector<std::vector<double>> rows;
  std::set<std::vector<double>> seen;
  rows.reserve(config.n_total);
  std::size_t attempts = 0;
  while (rows.size() < config.n_total) {
    if (++attempts > 100 * config.n_total + 1000) {
      throw InvalidArgument("schema too small to draw unique benchmark records");
    }
    std::vector<double> x(sc.width(), 0.0);
    for (std::size_t i = 0; i < sc.num_features(); ++i) {
      const FeatureSpec& f = sc.feature(i);
      const std::size_t off = sc.offset(i);
      switch (f.kind) {
        case FeatureKind::kNumeric: {
          const auto it = NumericPriors().find(f.name);
          const NumericPrior prior = it != NumericPriors().end()
                                         ? it->second
                                         : NumericPrior{(f.min + f.max) / 2, (f.max - f.min) / 6};
          double v = std::clamp(rng.Normal(prior.mean, prior.sd), f.min, f.max);
          if (f.integer_valued) v = std::round(v);
          x[off] = std::clamp(v, f.min, f.max);
          break;
        }
        case FeatureKind::kBinary: {
          const auto it = BinaryPrevalence().find(f.name);
          const double p = it != BinaryPrevalence().end() ? it->second : 0.15;
          x[off] = rng.Bernoulli(p) ? 1.0 : 0.0;
          break;
        }
        case FeatureKind::kCategorical:
          x[off + rng.Index(f.levels.size())] = 1.0;
          break;
      }
    }
    if (seen.insert(x).second) rows.push_back(std::move(x));
  }

  std::vector<double> noisy(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    noisy[i] = config.label_rule.Score(sc, rows[i]) + rng.Normal(0.0, config.label_rule.noise_sd);
  }
  std::vector<std::size_t> order = Iota(rows.size());
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return noisy[a] > noisy[b]; });
  std::vector<int> labels(rows.size(), 0);
  for (std::size_t k = 0; k < config.n_positive; ++k) labels[order[k]] = 1;

  Dataset dataset(schema);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    dataset.Add(CaseRecord{std::move(rows[i]), labels[i]});
  }
  return dataset;
}

}  // namespace tabrisk
