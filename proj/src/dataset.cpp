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

#include "tabrisk/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "tabrisk/errors.hpp"
#include "tabrisk/rng.hpp"

namespace tabrisk {

const char* ToString(Provenance p) { return p == Provenance::kReal ? "real" : "synthetic"; }

Dataset::Dataset(SchemaPtr schema) : schema_(std::move(schema)) {
  if (!schema_) throw InvalidArgument("dataset requires a schema");
}

void Dataset::Add(CaseRecord record, Provenance provenance) {
  if (record.x.size() != schema_->width()) {
    throw InvalidArgument("record width " + std::to_string(record.x.size()) +
                          " does not match schema width " + std::to_string(schema_->width()));
  }
  if (record.y && *record.y != 0 && *record.y != 1) {
    throw InvalidArgument("label must be 0 or 1");
  }
  for (std::size_t i = 0; i < schema_->num_features(); ++i) {
    const FeatureSpec& f = schema_->feature(i);
    if (f.kind != FeatureKind::kCategorical) continue;
    double sum = 0.0;
    for (std::size_t s = 0; s < f.width(); ++s) {
      const double v = record.x[schema_->offset(i) + s];
      if (v != 0.0 && v != 1.0) {
        throw InvalidArgument("categorical block '" + f.name + "' is not one-hot");
      }
      sum += v;
    }
    if (sum != 1.0) throw InvalidArgument("categorical block '" + f.name + "' is not one-hot");
  }
  records_.push_back(std::move(record));
  provenance_.push_back(provenance);
}

void Dataset::Append(const Dataset& other) {
  if (!(other.schema() == schema())) throw InvalidArgument("cannot append: schema mismatch");
  records_.insert(records_.end(), other.records_.begin(), other.records_.end());
  provenance_.insert(provenance_.end(), other.provenance_.begin(), other.provenance_.end());
}

std::size_t Dataset::CountLabel(int y) const {
  return static_cast<std::size_t>(std::count_if(
      records_.begin(), records_.end(), [y](const CaseRecord& r) { return r.y == y; }));
}

std::size_t Dataset::CountProvenance(Provenance p) const {
  return static_cast<std::size_t>(std::count(provenance_.begin(), provenance_.end(), p));
}

std::vector<int> Dataset::Labels() const {
  std::vector<int> y;
  y.reserve(records_.size());
  for (std::size_t i = 0; i < records_.size(); ++i) {
    if (!records_[i].y) throw InvalidArgument("record " + std::to_string(i) + " is unlabeled");
    y.push_back(*records_[i].y);
  }
  return y;
}

Dataset Dataset::Subset(std::span<const std::size_t> rows) const {
  Dataset out(schema_);
  out.records_.reserve(rows.size());
  out.provenance_.reserve(rows.size());
  for (std::size_t r : rows) {
    out.records_.push_back(records_.at(r));
    out.provenance_.push_back(provenance_.at(r));
  }
  return out;
}

Dataset Dataset::WithProvenance(Provenance p) const {
  Dataset out = *this;
  std::fill(out.provenance_.begin(), out.provenance_.end(), p);
  return out;
}

namespace {

std::vector<std::string> SplitCsvLine(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cell.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cell.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      cells.push_back(std::move(cell));
      cell.clear();
    } else {
      cell.push_back(c);
    }
  }
  cells.push_back(std::move(cell));
  return cells;
}

std::string Trim(std::string s) {
  const auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

std::optional<double> ParseDouble(const std::string& s) {
  double v = 0.0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  if (first != last && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last || s.empty()) return std::nullopt;
  return v;
}

}  // namespace

Dataset ParseDatasetCsv(std::istream& in, SchemaPtr schema) {
  const FeatureSchema& sc = *schema;
  std::string line;
  if (!std::getline(in, line)) throw DataError("missing header row", 0, "");
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  std::vector<std::string> header = SplitCsvLine(line);
  for (auto& h : header) h = Trim(h);

  const std::size_t nf = sc.num_features();
  if (header.size() < nf) {
    throw DataError("header has " + std::to_string(header.size()) + " columns, expected at least " +
                        std::to_string(nf),
                    0, "");
  }
  for (std::size_t i = 0; i < nf; ++i) {
    if (header[i] != sc.feature(i).name) {
      throw DataError("header mismatch: expected '" + sc.feature(i).name + "'", 0, header[i]);
    }
  }
  bool has_outcome = false;
  bool has_provenance = false;
  std::size_t next = nf;
  if (next < header.size() && header[next] == sc.outcome_name()) {
    has_outcome = true;
    ++next;
  }
  if (next < header.size() && header[next] == "provenance") {
    has_provenance = true;
    ++next;
  }
  if (next != header.size()) {
    throw DataError("unexpected column", 0, header[next]);
  }

  Dataset dataset(schema);
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (Trim(line).empty()) continue;
    ++row;
    std::vector<std::string> cells = SplitCsvLine(line);
    if (cells.size() != header.size()) {
      throw DataError("expected " + std::to_string(header.size()) + " cells, found " +
                          std::to_string(cells.size()),
                      row, "");
    }
    CaseRecord rec;
    rec.x.assign(sc.width(), 0.0);
    for (std::size_t i = 0; i < nf; ++i) {
      const FeatureSpec& f = sc.feature(i);
      const std::string cell = Trim(cells[i]);
      if (cell.empty()) throw DataError("missing value", row, f.name);
      const std::size_t off = sc.offset(i);
      switch (f.kind) {
        case FeatureKind::kBinary: {
          if (cell == "0") {
            rec.x[off] = 0.0;
          } else if (cell == "1") {
            rec.x[off] = 1.0;
          } else {
            throw DataError("binary value must be 0 or 1, got '" + cell + "'", row, f.name);
          }
          break;
        }
        case FeatureKind::kNumeric: {
          const auto v = ParseDouble(cell);
          if (!v || !std::isfinite(*v)) {
            throw DataError("cannot parse number '" + cell + "'", row, f.name);
          }
          rec.x[off] = *v;
          break;
        }
        case FeatureKind::kCategorical: {
          const auto it = std::find(f.levels.begin(), f.levels.end(), cell);
          if (it == f.levels.end()) {
            throw DataError("level '" + cell + "' is not declared", row, f.name);
          }
          rec.x[off + static_cast<std::size_t>(it - f.levels.begin())] = 1.0;
          break;
        }
      }
    }
    if (has_outcome) {
      const std::string cell = Trim(cells[nf]);
      if (cell == "0") {
        rec.y = 0;
      } else if (cell == "1") {
        rec.y = 1;
      } else if (cell.empty()) {
        throw DataError("missing outcome", row, sc.outcome_name());
      } else {
        throw DataError("outcome must be 0 or 1, got '" + cell + "'", row, sc.outcome_name());
      }
    }
    Provenance prov = Provenance::kReal;
    if (has_provenance) {
      const std::string cell = Trim(cells[header.size() - 1]);
      if (cell == "synthetic") {
        prov = Provenance::kSynthetic;
      } else if (cell != "real") {
        throw DataError("provenance must be 'real' or 'synthetic'", row, "provenance");
      }
    }
    dataset.Add(std::move(rec), prov);
  }
  return dataset;
}

Dataset LoadDataset(const std::filesystem::path& path, SchemaPtr schema) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open dataset file " + path.string());
  return ParseDatasetCsv(in, std::move(schema));
}

std::string FormatNumber(double v) {
  if (v == 0.0) return "0";
  if (std::nearbyint(v) == v && std::fabs(v) < 1e15) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.0f", v);
    return buf;
  }
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void WriteDatasetCsv(const Dataset& dataset, std::ostream& out, bool with_provenance) {
  const FeatureSchema& sc = dataset.schema();
  for (std::size_t i = 0; i < sc.num_features(); ++i) out << sc.feature(i).name << ',';
  out << sc.outcome_name();
  if (with_provenance) out << ",provenance";
  out << '\n';
  for (std::size_t r = 0; r < dataset.size(); ++r) {
    const CaseRecord& rec = dataset.record(r);
    for (std::size_t i = 0; i < sc.num_features(); ++i) {
      out << DescribeFeatureValue(sc, i, rec.x) << ',';
    }
    if (rec.y) out << *rec.y;
    if (with_provenance) out << ',' << ToString(dataset.provenance(r));
    out << '\n';
  }
}

void SaveDataset(const Dataset& dataset, const std::filesystem::path& path,
                 bool with_provenance) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  WriteDatasetCsv(dataset, out, with_provenance);
}

std::string DescribeFeatureValue(const FeatureSchema& schema, std::size_t feature,
                                 std::span<const double> x) {
  const FeatureSpec& f = schema.feature(feature);
  const std::size_t off = schema.offset(feature);
  if (f.kind == FeatureKind::kCategorical) {
    std::size_t best = 0;
    for (std::size_t s = 1; s < f.width(); ++s) {
      if (x[off + s] > x[off + best]) best = s;
    }
    return f.levels[best];
  }
  return FormatNumber(x[off]);
}

nlohmann::json DecodeFeatureMap(const FeatureSchema& schema, std::span<const double> x) {
  nlohmann::json map = nlohmann::json::object();
  for (std::size_t i = 0; i < schema.num_features(); ++i) {
    const FeatureSpec& f = schema.feature(i);
    const double v = x[schema.offset(i)];
    switch (f.kind) {
      case FeatureKind::kBinary:
        map[f.name] = static_cast<int>(v);
        break;
      case FeatureKind::kNumeric:
        map[f.name] = v;
        break;
      case FeatureKind::kCategorical:
        map[f.name] = DescribeFeatureValue(schema, i, x);
        break;
    }
  }
  return map;
}

std::vector<double> EncodeFeatureMap(const FeatureSchema& schema, const nlohmann::json& map) {
  if (!map.is_object()) throw DataError("feature map must be a JSON object", 0, "features");
  for (const auto& [key, value] : map.items()) {
    if (!schema.FeatureIndex(key)) throw DataError("unknown feature", 0, key);
  }
  std::vector<double> x(schema.width(), 0.0);
  for (std::size_t i = 0; i < schema.num_features(); ++i) {
    const FeatureSpec& f = schema.feature(i);
    const auto it = map.find(f.name);
    if (it == map.end()) throw DataError("missing feature", 0, f.name);
    const std::size_t off = schema.offset(i);
    switch (f.kind) {
      case FeatureKind::kBinary: {
        double v = -1.0;
        if (it->is_boolean()) {
          v = it->get<bool>() ? 1.0 : 0.0;
        } else if (it->is_number()) {
          v = it->get<double>();
        }
        if (v != 0.0 && v != 1.0) throw DataError("binary value must be 0 or 1", 0, f.name);
        x[off] = v;
        break;
      }
      case FeatureKind::kNumeric: {
        if (!it->is_number()) throw DataError("numeric value expected", 0, f.name);
        const double v = it->get<double>();
        if (!std::isfinite(v)) throw DataError("numeric value must be finite", 0, f.name);
        x[off] = v;
        break;
      }
      case FeatureKind::kCategorical: {
        if (!it->is_string()) throw DataError("categorical level string expected", 0, f.name);
        const std::string level = it->get<std::string>();
        const auto lv = std::find(f.levels.begin(), f.levels.end(), level);
        if (lv == f.levels.end()) throw DataError("level '" + level + "' is not declared", 0, f.name);
        x[off + static_cast<std::size_t>(lv - f.levels.begin())] = 1.0;
        break;
      }
    }
  }
  return x;
}

BalancedSplit SplitBalancedTest(const Dataset& dataset, std::size_t n_per_class,
                                std::uint64_t seed) {
  std::vector<std::size_t> pos, neg;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    const auto& y = dataset.record(i).y;
    if (!y) throw InvalidArgument("split requires labeled records");
    (*y == 1 ? pos : neg).push_back(i);
  }
  if (pos.size() < n_per_class || neg.size() < n_per_class) {
    throw InvalidArgument("balanced split needs " + std::to_string(n_per_class) +
                          " records per class; have " + std::to_string(pos.size()) +
                          " positive and " + std::to_string(neg.size()) + " negative");
  }
  Rng rng(seed);
  rng.Shuffle(pos);
  rng.Shuffle(neg);
  std::vector<char> in_test(dataset.size(), 0);
  for (std::size_t i = 0; i < n_per_class; ++i) {
    in_test[pos[i]] = 1;
    in_test[neg[i]] = 1;
  }
  BalancedSplit split{Dataset(dataset.schema_ptr()), Dataset(dataset.schema_ptr()), {}, {}};
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    (in_test[i] ? split.test_rows : split.train_rows).push_back(i);
  }
  split.train = dataset.Subset(split.train_rows);
  split.test = dataset.Subset(split.test_rows);
  return split;
}

}  // namespace tabrisk
