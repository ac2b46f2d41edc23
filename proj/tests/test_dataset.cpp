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

#include <set>
#include <sstream>

#include "doctest.h"
#include "tabrisk/benchmark_data.hpp"
#include "tabrisk/dataset.hpp"
#include "tabrisk/errors.hpp"
#include "tabrisk/scaler.hpp"
#include "test_util.hpp"

using namespace tabrisk;
using namespace tabrisk::testing;

TEST_CASE("schema encodes widths and offsets") {
  const SchemaPtr s = MixedSchema();
  CHECK(s->width() == 6);
  CHECK(s->offset(2) == 2);
  CHECK(s->offset(3) == 5);
  CHECK(s->FeatureOfSlot(4) == 2);
  CHECK(s->SlotName(3) == "color=green");
  CHECK(FeatureSchema::FromJson(s->ToJson()) == *s);
}

TEST_CASE("schema rejects invalid declarations") {
  CHECK_THROWS_AS(FeatureSchema({FeatureSpec::Binary("a"), FeatureSpec::Binary("a")}, "y"), SchemaError);
  CHECK_THROWS_AS(FeatureSchema({FeatureSpec::Numeric("a", 2, 2, false)}, "y"), SchemaError);
  CHECK_THROWS_AS(FeatureSchema({FeatureSpec::Categorical("c", {"only"})}, "y"), SchemaError);
}

TEST_CASE("default benchmark schema has 34 features") {
  const FeatureSchema s = DefaultBenchmarkSchema();
  CHECK(s.num_features() == 34);
  CHECK(s.width() == 34);
  CHECK(s.FeatureIndex("abnormal_fhr").has_value());
}

TEST_CASE("csv round trip is exact") {
  const SchemaPtr s = MixedSchema();
  Dataset d(s);
  d.Add({{20, 1, 0, 1, 0, 0.1 + 0.2}, 1});
  d.Add({{31, 0, 0, 0, 1, 1.0 / 3.0}, 0}, Provenance::kSynthetic);
  std::stringstream ss;
  WriteDatasetCsv(d, ss, true);
  const Dataset back = ParseDatasetCsv(ss, s);
  REQUIRE(back.size() == 2);
  CHECK(back.record(0) == d.record(0));
  CHECK(back.record(1) == d.record(1));
  CHECK(back.provenance(1) == Provenance::kSynthetic);
}

TEST_CASE("csv errors carry row and column") {
  const SchemaPtr s = MixedSchema();
  std::stringstream ss("age,flag,color,weight,outcome\n20,1,red,1.5,1\n21,2,red,1.5,0\n");
  try {
    ParseDatasetCsv(ss, s);
    FAIL("expected a DataError");
  } catch (const DataError& e) {
    CHECK(e.row() == 2);
    CHECK(e.column() == "flag");
  }
  std::stringstream bad_level("age,flag,color,weight,outcome\n20,1,purple,1.5,1\n");
  CHECK_THROWS_AS(ParseDatasetCsv(bad_level, s), DataError);
  std::stringstream unlabeled("age,flag,color,weight\n20,1,red,1.5\n");
  const Dataset u = ParseDatasetCsv(unlabeled, s);
  CHECK_FALSE(u.record(0).y.has_value());
}

TEST_CASE("feature map encoding validates fields") {
  const SchemaPtr s = MixedSchema();
  const nlohmann::json ok = {{"age", 30}, {"flag", 1}, {"color", "blue"}, {"weight", 2.5}};
  const std::vector<double> x = EncodeFeatureMap(*s, ok);
  CHECK(x == std::vector<double>{30, 1, 0, 0, 1, 2.5});
  CHECK(DecodeFeatureMap(*s, x) == ok);
  nlohmann::json missing = ok;
  missing.erase("weight");
  try {
    EncodeFeatureMap(*s, missing);
    FAIL("expected a DataError");
  } catch (const DataError& e) {
    CHECK(e.column() == "weight");
  }
  nlohmann::json unknown = ok;
  unknown["height"] = 3;
  CHECK_THROWS_AS(EncodeFeatureMap(*s, unknown), DataError);
  nlohmann::json level = ok;
  level["color"] = "mauve";
  CHECK_THROWS_AS(EncodeFeatureMap(*s, level), DataError);
}

TEST_CASE("min-max scaler") {
  const SchemaPtr s = NumericSchema(2, -10, 10);
  Dataset d(s);
  d.Add({{0, 5}, 0});
  d.Add({{4, 5}, 1});
  const ScalerParams sc = FitMinMax(d);
  CHECK(sc.Transform(std::vector<double>{2, 5}) == std::vector<double>{0.5, 0.0});
  CHECK(sc.Transform(std::vector<double>{-4, 5})[0] == doctest::Approx(-1.0));
  CHECK(sc.Inverse(std::vector<double>{0.25, 0.7}) == std::vector<double>{1, 5});
  CHECK(ScalerParams::FromJson(sc.ToJson()) == sc);
}

TEST_CASE("benchmark generator and balanced split") {
  const SchemaPtr s = BenchmarkSchema();
  const Dataset d = GenerateBenchmarkDataset(BenchmarkConfig{}, s);
  CHECK(d.size() == 1457);
  CHECK(d.CountLabel(1) == 112);
  std::set<std::vector<double>> unique;
  for (const CaseRecord& r : d.records()) unique.insert(r.x);
  CHECK(unique.size() == d.size());

  const BalancedSplit a = SplitBalancedTest(d, 19, 3);
  const BalancedSplit b = SplitBalancedTest(d, 19, 3);
  CHECK(a.test.size() == 38);
  CHECK(a.test.CountLabel(1) == 19);
  CHECK(a.train.size() == 1419);
  CHECK(a.test_rows == b.test_rows);
  std::set<std::size_t> rows(a.train_rows.begin(), a.train_rows.end());
  for (std::size_t r : a.test_rows) CHECK(rows.count(r) == 0);
  CHECK(rows.size() + a.test_rows.size() == d.size());
}

TEST_CASE("benchmark labels follow the label rule") {
  const SchemaPtr s = BenchmarkSchema();
  BenchmarkConfig cfg;
  cfg.label_rule.noise_sd = 0.0;
  const Dataset d = GenerateBenchmarkDataset(cfg, s);
  double min_pos = 1e300, max_neg = -1e300;
  for (const CaseRecord& r : d.records()) {
    const double sc = cfg.label_rule.Score(*s, r.x);
    if (*r.y == 1) min_pos = std::min(min_pos, sc);
    else max_neg = std::max(max_neg, sc);
  }
  CHECK(min_pos >= max_neg);
  const auto [a, c] = cfg.label_rule.RawCoefficients(*s);
  const CaseRecord& r0 = d.record(0);
  double lin = c;
  for (std::size_t j = 0; j < a.size(); ++j) lin += a[j] * r0.x[j];
  CHECK(lin == doctest::Approx(cfg.label_rule.Score(*s, r0.x)).epsilon(1e-12));
}
