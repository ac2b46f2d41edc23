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

#ifndef TABRISK_SCALER_HPP_
#define TABRISK_SCALER_HPP_

#include <span>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"
#include "tabrisk/dataset.hpp"

namespace tabrisk {

// Row-per-record matrix used for point sets (distances, neighbors, batching).
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Per-slot observed extremes of the fitted data.
struct ScalerParams {
  std::vector<double> min;
  std::vector<double> max;

  std::size_t width() const { return min.size(); }

  // (v - min) / (max - min); constant slots map to 0. No clipping, so values
  // outside the fitted range land outside [0, 1].
  std::vector<double> Transform(std::span<const double> x) const;
  void TransformInPlace(std::span<double> x) const;
  // Inverse of Transform for non-constant slots; constant slots return min.
  std::vector<double> Inverse(std::span<const double> z) const;

  nlohmann::json ToJson() const;
  static ScalerParams FromJson(const nlohmann::json& j);

  bool operator==(const ScalerParams&) const = default;
};

// Throws InvalidArgument on an empty dataset.
ScalerParams FitMinMax(const Dataset& dataset);

// Scaled (or raw, when scaler is null) records as matrix rows.
RowMatrix ToRowMatrix(const Dataset& dataset, const ScalerParams* scaler);

}  // namespace tabrisk

#endif  // TABRISK_SCALER_HPP_
