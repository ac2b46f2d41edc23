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

#include "tabrisk/scaler.hpp"

#include <algorithm>

#include "tabrisk/errors.hpp"

namespace tabrisk {

ScalerParams FitMinMax(const Dataset& dataset) {
  if (dataset.empty()) throw InvalidArgument("cannot fit a scaler on an empty dataset");
  const std::size_t d = dataset.schema().width();
  ScalerParams s;
  s.min = dataset.record(0).x;
  s.max = dataset.record(0).x;
  for (const CaseRecord& r : dataset.records()) {
    for (std::size_t j = 0; j < d; ++j) {
      s.min[j] = std::min(s.min[j], r.x[j]);
      s.max[j] = std::max(s.max[j], r.x[j]);
    }
  }
  return s;
}

void ScalerParams::TransformInPlace(std::span<double> x) const {
  if (x.size() != width()) {
    throw InvalidArgument("scaler width " + std::to_string(width()) +
                          " does not match vector length " + std::to_string(x.size()));
  }
  for (std::size_t j = 0; j < x.size(); ++j) {
    const double range = max[j] - min[j];
    x[j] = range > 0.0 ? (x[j] - min[j]) / range : 0.0;
  }
}

std::vector<double> ScalerParams::Transform(std::span<const double> x) const {
  std::vector<double> z(x.begin(), x.end());
  TransformInPlace(z);
  return z;
}

std::vector<double> ScalerParams::Inverse(std::span<const double> z) const {
  if (z.size() != width()) throw InvalidArgument("scaler width mismatch");
  std::vector<double> x(z.size());
  for (std::size_t j = 0; j < z.size(); ++j) {
    const double range = max[j] - min[j];
    x[j] = range > 0.0 ? min[j] + z[j] * range : min[j];
  }
  return x;
}

nlohmann::json ScalerParams::ToJson() const { return {{"min", min}, {"max", max}}; }

ScalerParams ScalerParams::FromJson(const nlohmann::json& j) {
  ScalerParams s;
  s.min = j.at("min").get<std::vector<double>>();
  s.max = j.at("max").get<std::vector<double>>();
  if (s.min.size() != s.max.size()) throw InvalidArgument("scaler min/max widths differ");
  for (std::size_t k = 0; k < s.min.size(); ++k) {
    if (s.max[k] < s.min[k]) throw InvalidArgument("scaler slot has max < min");
  }
  return s;
}

RowMatrix ToRowMatrix(const Dataset& dataset, const ScalerParams* scaler) {
  const std::size_t d = dataset.schema().width();
  RowMatrix m(dataset.size(), d);
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    std::span<double> row(m.row(i).data(), d);
    std::copy(dataset.record(i).x.begin(), dataset.record(i).x.end(), row.begin());
    if (scaler) scaler->TransformInPlace(row);
  }
  return m;
}

}  // namespace tabrisk
