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

#ifndef TABRISK_SCHEMA_HPP_
#define TABRISK_SCHEMA_HPP_

#include <cstddef>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

namespace tabrisk {

enum class FeatureKind { kBinary, kCategorical, kNumeric };

const char* ToString(FeatureKind kind);

// One raw input column. Binary and numeric features occupy a single encoded
// slot; a categorical feature occupies one slot per level (one-hot).
struct FeatureSpec {
  std::string name;
  FeatureKind kind = FeatureKind::kBinary;
  std::vector<std::string> levels;  // categorical only
  double min = 0.0;                 // numeric only
  double max = 1.0;                 // numeric only
  bool integer_valued = false;      // numeric only

  static FeatureSpec Binary(std::string name);
  static FeatureSpec Categorical(std::string name, std::vector<std::string> levels);
  static FeatureSpec Numeric(std::string name, double min, double max, bool integer_valued);

  std::size_t width() const {
    return kind == FeatureKind::kCategorical ? levels.size() : 1;
  }
};

// Ordered feature list plus the outcome column name. Immutable once built;
// shared between datasets and models through std::shared_ptr.
class FeatureSchema {
 public:
  // Throws SchemaError when names are empty or duplicated, a numeric range is
  // empty, or a categorical has fewer than two levels.
  FeatureSchema(std::vector<FeatureSpec> features, std::string outcome_name);

  const std::vector<FeatureSpec>& features() const { return features_; }
  const FeatureSpec& feature(std::size_t i) const { return features_.at(i); }
  std::size_t num_features() const { return features_.size(); }
  const std::string& outcome_name() const { return outcome_name_; }

  // Encoded width d.
  std::size_t width() const { return width_; }
  // First encoded slot of feature i.
  std::size_t offset(std::size_t i) const { return offsets_.at(i); }
  std::optional<std::size_t> FeatureIndex(const std::string& name) const;
  // Feature owning an encoded slot.
  std::size_t FeatureOfSlot(std::size_t slot) const { return slot_owner_.at(slot); }

  // Human-readable slot label, "name" or "name=level" for one-hot slots.
  std::string SlotName(std::size_t slot) const;

  nlohmann::json ToJson() const;
  static FeatureSchema FromJson(const nlohmann::json& doc);
  static FeatureSchema Load(const std::filesystem::path& path);
  void Save(const std::filesystem::path& path) const;

  bool operator==(const FeatureSchema& other) const;

 private:
  std::vector<FeatureSpec> features_;
  std::string outcome_name_;
  std::vector<std::size_t> offsets_;
  std::vector<std::size_t> slot_owner_;
  std::size_t width_ = 0;
};

using SchemaPtr = std::shared_ptr<const FeatureSchema>;

// 34-feature schema used by the synthetic benchmark: five numeric risk
// factors (ranges of the reference cohort) and 29 binary indicators spanning
// maternal, obstetrical, fetal and delivery/monitoring categories.
FeatureSchema DefaultBenchmarkSchema();

}  // namespace tabrisk

#endif  // TABRISK_SCHEMA_HPP_
