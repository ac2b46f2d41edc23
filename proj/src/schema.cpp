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

#include "tabrisk/schema.hpp"

#include <fstream>
#include <set>

#include "tabrisk/errors.hpp"

namespace tabrisk {

const char* ToString(FeatureKind kind) {
  switch (kind) {
    case FeatureKind::kBinary:
      return "binary";
    case FeatureKind::kCategorical:
      return "categorical";
    case FeatureKind::kNumeric:
      return "numeric";
  }
  return "unknown";
}

FeatureSpec FeatureSpec::Binary(std::string name) {
  FeatureSpec f;
  f.name = std::move(name);
  f.kind = FeatureKind::kBinary;
  return f;
}

FeatureSpec FeatureSpec::Categorical(std::string name, std::vector<std::string> levels) {
  FeatureSpec f;
  f.name = std::move(name);
  f.kind = FeatureKind::kCategorical;
  f.levels = std::move(levels);
  return f;
}

FeatureSpec FeatureSpec::Numeric(std::string name, double min, double max,
                                 bool integer_valued) {
  FeatureSpec f;
  f.name = std::move(name);
  f.kind = FeatureKind::kNumeric;
  f.min = min;
  f.max = max;
  f.integer_valued = integer_valued;
  return f;
}

FeatureSchema::FeatureSchema(std::vector<FeatureSpec> features, std::string outcome_name)
    : features_(std::move(features)), outcome_name_(std::move(outcome_name)) {
  if (outcome_name_.empty()) throw SchemaError("outcome name must be non-empty");
  std::set<std::string> seen{outcome_name_};
  for (std::size_t i = 0; i < features_.size(); ++i) {
    const FeatureSpec& f = features_[i];
    if (f.name.empty()) throw SchemaError("feature " + std::to_string(i) + " has an empty name");
    if (!seen.insert(f.name).second) throw SchemaError("duplicate name '" + f.name + "'");
    if (f.kind == FeatureKind::kNumeric && !(f.min < f.max)) {
      throw SchemaError("numeric feature '" + f.name + "' needs min < max");
    }
    if (f.kind == FeatureKind::kCategorical) {
      if (f.levels.size() < 2) {
        throw SchemaError("categorical feature '" + f.name + "' needs at least two levels");
      }
      std::set<std::string> levels(f.levels.begin(), f.levels.end());
      if (levels.size() != f.levels.size()) {
        throw SchemaError("categorical feature '" + f.name + "' repeats a level");
      }
    }
    offsets_.push_back(width_);
    for (std::size_t s = 0; s < f.width(); ++s) slot_owner_.push_back(i);
    width_ += f.width();
  }
}

std::optional<std::size_t> FeatureSchema::FeatureIndex(const std::string& name) const {
  for (std::size_t i = 0; i < features_.size(); ++i) {
    if (features_[i].name == name) return i;
  }
  return std::nullopt;
}

std::string FeatureSchema::SlotName(std::size_t slot) const {
  const std::size_t i = FeatureOfSlot(slot);
  const FeatureSpec& f = features_[i];
  if (f.kind != FeatureKind::kCategorical) return f.name;
  return f.name + "=" + f.levels[slot - offsets_[i]];
}

nlohmann::json FeatureSchema::ToJson() const {
  nlohmann::json features = nlohmann::json::array();
  for (const FeatureSpec& f : features_) {
    nlohmann::json j{{"name", f.name}, {"kind", ToString(f.kind)}};
    if (f.kind == FeatureKind::kCategorical) j["levels"] = f.levels;
    if (f.kind == FeatureKind::kNumeric) {
      j["min"] = f.min;
      j["max"] = f.max;
      j["integer"] = f.integer_valued;
    }
    features.push_back(std::move(j));
  }
  return {{"outcome", outcome_name_}, {"features", std::move(features)}};
}

FeatureSchema FeatureSchema::FromJson(const nlohmann::json& doc) {
  try {
    std::vector<FeatureSpec> features;
    for (const auto& j : doc.at("features")) {
      const std::string name = j.at("name").get<std::string>();
      const std::string kind = j.at("kind").get<std::string>();
      if (kind == "binary") {
        features.push_back(FeatureSpec::Binary(name));
      } else if (kind == "categorical") {
        features.push_back(
            FeatureSpec::Categorical(name, j.at("levels").get<std::vector<std::string>>()));
      } else if (kind == "numeric") {
        features.push_back(FeatureSpec::Numeric(name, j.at("min").get<double>(),
                                                j.at("max").get<double>(),
                                                j.value("integer", false)));
      } else {
        throw SchemaError("feature '" + name + "' has unknown kind '" + kind + "'");
      }
    }
    return FeatureSchema(std::move(features), doc.at("outcome").get<std::string>());
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("malformed schema document: ") + e.what());
  }
}

FeatureSchema FeatureSchema::Load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw SchemaError("cannot open schema file " + path.string());
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError("schema file " + path.string() + " is not valid JSON: " + e.what());
  }
  return FromJson(doc);
}

void FeatureSchema::Save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << ToJson().dump(2) << '\n';
}

bool FeatureSchema::operator==(const FeatureSchema& other) const {
  return ToJson() == other.ToJson();
}

FeatureSchema DefaultBenchmarkSchema() {
  std::vector<FeatureSpec> f;
  // Numeric ranges follow the reference cohort summary.
  f.push_back(FeatureSpec::Numeric("maternal_age", 15, 47, true));
  f.push_back(FeatureSpec::Numeric("gestational_age", 27, 42, true));
  f.push_back(FeatureSpec::Numeric("labor_duration", 1, 41, true));
  f.push_back(FeatureSpec::Numeric("fetal_weight", 950, 4905, true));
  f.push_back(FeatureSpec::Numeric("parity", 0, 10, true));
  // Maternal.
  for (const char* name : {"diabetes", "hypertension", "high_cholesterol", "obesity", "smoking",
                           "substance_use", "maternal_infection", "anemia", "thyroid_disease",
                           "asthma"}) {
    f.push_back(FeatureSpec::Binary(name));
  }
  // Obstetrical.
  for (const char* name : {"preeclampsia", "prior_cesarean", "multiple_gestation",
                           "oligohydramnios", "polyhydramnios", "placental_abruption",
                           "prolonged_rupture_of_membranes", "chorioamnionitis"}) {
    f.push_back(FeatureSpec::Binary(name));
  }
  // Fetal.
  for (const char* name : {"fetal_growth_restriction", "suspected_macrosomia",
                           "breech_presentation", "meconium_stained_fluid"}) {
    f.push_back(FeatureSpec::Binary(name));
  }
  // Delivery and fetal monitoring.
  for (const char* name : {"abnormal_fhr", "abnormal_decelerations", "absent_accelerations",
                           "abnormal_variability", "excessive_uterine_activity",
                           "cesarean_section", "induction_of_labor"}) {
    f.push_back(FeatureSpec::Binary(name));
  }
  return FeatureSchema(std::move(f), "abnormal_outcome");
}

}  // namespace tabrisk
