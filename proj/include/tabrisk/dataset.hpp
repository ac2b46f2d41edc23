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

#ifndef TABRISK_DATASET_HPP_
#define TABRISK_DATASET_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "tabrisk/schema.hpp"

namespace tabrisk {

enum class Provenance : std::uint8_t { kReal, kSynthetic };

const char* ToString(Provenance p);

// Encoded feature vector with an optional binary outcome
// (1 = abnormal/positive, 0 = normal/negative).
struct CaseRecord {
  std::vector<double> x;
  std::optional<int> y;

  bool operator==(const CaseRecord&) const = default;
};

// Records conforming to one schema, each tagged real or synthetic.
class Dataset {
 public:
  explicit Dataset(SchemaPtr schema);

  // Validates width, label domain and one-hot blocks; throws InvalidArgument.
  void Add(CaseRecord record, Provenance provenance = Provenance::kReal);
  void Append(const Dataset& other);

  const FeatureSchema& schema() const { return *schema_; }
  const SchemaPtr& schema_ptr() const { return schema_; }
  std::size_t size() const { return records_.size(); }
  bool empty() const { return records_.empty(); }
  const CaseRecord& record(std::size_t i) const { return records_.at(i); }
  const std::vector<CaseRecord>& records() const { return records_; }
  Provenance provenance(std::size_t i) const { return provenance_.at(i); }

  std::size_t CountLabel(int y) const;
  std::size_t CountProvenance(Provenance p) const;
  // Every record must be labeled; throws InvalidArgument otherwise.
  std::vector<int> Labels() const;

  Dataset Subset(std::span<const std::size_t> rows) const;
  // Copy with every provenance tag replaced.
  Dataset WithProvenance(Provenance p) const;

 private:
  SchemaPtr schema_;
  std::vector<CaseRecord> records_;
  std::vector<Provenance> provenance_;
};

// CSV ingestion. The header must list the schema features in order followed
// by the outcome column; the outcome column may be omitted for unlabeled case
// files, and a trailing "provenance" column is accepted. Errors carry the
// data row and column.
Dataset LoadDataset(const std::filesystem::path& path, SchemaPtr schema);
Dataset ParseDatasetCsv(std::istream& in, SchemaPtr schema);

// Writes raw-unit CSV. Integral values print without a fractional part and
// all others with round-trip precision, so export followed by load is exact.
void SaveDataset(const Dataset& dataset, const std::filesystem::path& path,
                 bool with_provenance = false);
void WriteDatasetCsv(const Dataset& dataset, std::ostream& out, bool with_provenance = false);

std::string FormatNumber(double v);

// Feature map (name -> raw value) used by the JSON interfaces. Binary values
// are 0/1, numerics are numbers and categoricals are level strings.
nlohmann::json DecodeFeatureMap(const FeatureSchema& schema, std::span<const double> x);
// Throws DataError whose column() names the offending field: missing feature,
// unknown feature, wrong type, non-binary value or unknown categorical level.
std::vector<double> EncodeFeatureMap(const FeatureSchema& schema, const nlohmann::json& map);

// Raw decoded value of feature i, for display.
std::string DescribeFeatureValue(const FeatureSchema& schema, std::size_t feature,
                                 std::span<const double> x);

struct BalancedSplit {
  Dataset train;
  Dataset test;
  std::vector<std::size_t> train_rows;  // row indices into the source dataset
  std::vector<std::size_t> test_rows;
};

// Draws n_per_class records of each class (without replacement, seeded) into
// the test set; the remainder, in source order, forms the training set.
BalancedSplit SplitBalancedTest(const Dataset& dataset, std::size_t n_per_class,
                                std::uint64_t seed);

}  // namespace tabrisk

#endif  // TABRISK_DATASET_HPP_
