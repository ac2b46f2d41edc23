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

#ifndef TABRISK_KERNELS_HPP_
#define TABRISK_KERNELS_HPP_

// Data-parallel inner loops. Each kernel has a serial reference and an OpenMP
// version; both evaluate every output element with the same per-element code
// and summation order, so their results are bit-identical.

#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "tabrisk/ensemble.hpp"
#include "tabrisk/scaler.hpp"

namespace tabrisk::kernels {

inline double Distance(const double* a, const double* b, std::size_t d) {
  double s = 0.0;
  for (std::size_t j = 0; j < d; ++j) {
    const double t = a[j] - b[j];
    s += t * t;
  }
  return std::sqrt(s);
}

// For every query row, the sum of Euclidean distances to the class-0 and to
// the class-1 rows of points.
struct ClassDistanceSums {
  std::vector<double> to0;
  std::vector<double> to1;
};

struct Neighbor {
  double distance;
  std::size_t index;
};

namespace serial {

ClassDistanceSums DistanceSumsByClass(const RowMatrix& queries, const RowMatrix& points,
                                      std::span<const int> point_labels);

// k nearest candidates (rows of points) for each query row index, excluding
// the query itself; ordered by distance, ties by lower index.
std::vector<std::vector<std::size_t>> KNearest(const RowMatrix& points,
                                               std::span<const std::size_t> queries,
                                               std::span<const std::size_t> candidates,
                                               std::size_t k);

// Closest candidate to query; ties by lower index. Empty when no candidates.
std::optional<Neighbor> Nearest(std::span<const double> query, const RowMatrix& points,
                                std::span<const std::size_t> candidates);

// Ensemble probability of every raw row, element-wise identical to
// EnsembleModel::PredictProba.
std::vector<double> PredictProba(const EnsembleModel& model, const RowMatrix& raw);

}  // namespace serial

namespace omp {

ClassDistanceSums DistanceSumsByClass(const RowMatrix& queries, const RowMatrix& points,
                                      std::span<const int> point_labels);
std::vector<std::vector<std::size_t>> KNearest(const RowMatrix& points,
                                               std::span<const std::size_t> queries,
                                               std::span<const std::size_t> candidates,
                                               std::size_t k);
std::optional<Neighbor> Nearest(std::span<const double> query, const RowMatrix& points,
                                std::span<const std::size_t> candidates);
std::vector<double> PredictProba(const EnsembleModel& model, const RowMatrix& raw);

}  // namespace omp

}  // namespace tabrisk::kernels

#endif  // TABRISK_KERNELS_HPP_
