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

#include "tabrisk/kernels.hpp"

#include <algorithm>
#include <limits>

#include <omp.h>

#include "tabrisk/errors.hpp"

namespace tabrisk::kernels {

namespace {

void CheckSums(const RowMatrix& queries, const RowMatrix& points, std::span<const int> labels) {
  if (static_cast<std::size_t>(points.rows()) != labels.size()) {
    throw InvalidArgument("one label per point required");
  }
  if (queries.cols() != points.cols()) throw InvalidArgument("query and point widths differ");
}

// Sums for one query; the loop order over points fixes the reduction order.
void SumsForRow(const RowMatrix& queries, Eigen::Index q, const RowMatrix& points,
                std::span<const int> labels, double& s0, double& s1) {
  const std::size_t d = static_cast<std::size_t>(points.cols());
  const double* a = queries.row(q).data();
  s0 = 0.0;
  s1 = 0.0;
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    const double dist = Distance(a, points.row(i).data(), d);
    if (labels[static_cast<std::size_t>(i)] == 1) {
      s1 += dist;
    } else {
      s0 += dist;
    }
  }
}

void CheckRaw(const EnsembleModel& model, const RowMatrix& raw) {
  if (static_cast<std::size_t>(raw.cols()) != model.scaler.width()) {
    throw InvalidArgument("input width does not match the ensemble schema");
  }
  if (!raw.allFinite()) throw InvalidArgument("input contains a non-finite value");
}

bool Closer(const Neighbor& a, const Neighbor& b) {
  return a.distance < b.distance || (a.distance == b.distance && a.index < b.index);
}

std::vector<std::size_t> KNearestForQuery(const RowMatrix& points, std::size_t q,
                                          std::span<const std::size_t> candidates,
                                          std::size_t k) {
  const std::size_t d = static_cast<std::size_t>(points.cols());
  const double* a = points.row(static_cast<Eigen::Index>(q)).data();
  std::vector<Neighbor> nb;
  nb.reserve(candidates.size());
  for (std::size_t c : candidates) {
    if (c == q) continue;
    nb.push_back({Distance(a, points.row(static_cast<Eigen::Index>(c)).data(), d), c});
  }
  const std::size_t take = std::min(k, nb.size());
  std::partial_sort(nb.begin(), nb.begin() + static_cast<std::ptrdiff_t>(take), nb.end(), Closer);
  std::vector<std::size_t> out(take);
  for (std::size_t i = 0; i < take; ++i) out[i] = nb[i].index;
  return out;
}

}  // namespace

namespace serial {

ClassDistanceSums DistanceSumsByClass(const RowMatrix& queries, const RowMatrix& points,
                                      std::span<const int> point_labels) {
  CheckSums(queries, points, point_labels);
  ClassDistanceSums out{std::vector<double>(queries.rows()), std::vector<double>(queries.rows())};
  for (Eigen::Index q = 0; q < queries.rows(); ++q) {
    SumsForRow(queries, q, points, point_labels, out.to0[q], out.to1[q]);
  }
  return out;
}

std::vector<std::vector<std::size_t>> KNearest(const RowMatrix& points,
                                               std::span<const std::size_t> queries,
                                               std::span<const std::size_t> candidates,
                                               std::size_t k) {
  std::vector<std::vector<std::size_t>> out(queries.size());
  for (std::size_t i = 0; i < queries.size(); ++i) {
    out[i] = KNearestForQuery(points, queries[i], candidates, k);
  }
  return out;
}

std::optional<Neighbor> Nearest(std::span<const double> query, const RowMatrix& points,
                                std::span<const std::size_t> candidates) {
  if (query.size() != static_cast<std::size_t>(points.cols())) {
    throw InvalidArgument("query width does not match points");
  }
  std::optional<Neighbor> best;
  for (std::size_t c : candidates) {
    const Neighbor n{Distance(query.data(), points.row(static_cast<Eigen::Index>(c)).data(), query.size()), c};
    if (!best || Closer(n, *best)) best = n;
  }
  return best;
}

std::vector<double> PredictProba(const EnsembleModel& model, const RowMatrix& raw) {
  CheckRaw(model, raw);
  std::vector<double> p(raw.rows());
  for (Eigen::Index i = 0; i < raw.rows(); ++i) {
    p[i] = model.PredictProba(std::span<const double>(raw.row(i).data(), raw.cols()));
  }
  return p;
}

}  // namespace serial

namespace omp {

ClassDistanceSums DistanceSumsByClass(const RowMatrix& queries, const RowMatrix& points,
                                      std::span<const int> point_labels) {
  CheckSums(queries, points, point_labels);
  ClassDistanceSums out{std::vector<double>(queries.rows()), std::vector<double>(queries.rows())};
  const Eigen::Index n = queries.rows();
#pragma omp parallel for schedule(static)
  for (Eigen::Index q = 0; q < n; ++q) {
    SumsForRow(queries, q, points, point_labels, out.to0[q], out.to1[q]);
  }
  return out;
}

std::vector<std::vector<std::size_t>> KNearest(const RowMatrix& points,
                                               std::span<const std::size_t> queries,
                                               std::span<const std::size_t> candidates,
                                               std::size_t k) {
  std::vector<std::vector<std::size_t>> out(queries.size());
  const std::size_t n = queries.size();
#pragma omp parallel for schedule(dynamic, 16)
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = KNearestForQuery(points, queries[i], candidates, k);
  }
  return out;
}

std::optional<Neighbor> Nearest(std::span<const double> query, const RowMatrix& points,
                                std::span<const std::size_t> candidates) {
  if (query.size() != static_cast<std::size_t>(points.cols())) {
    throw InvalidArgument("query width does not match points");
  }
  if (candidates.empty()) return std::nullopt;
  const int threads = omp_get_max_threads();
  std::vector<std::optional<Neighbor>> local(static_cast<std::size_t>(threads));
  const std::size_t n = candidates.size();
#pragma omp parallel num_threads(threads)
  {
    std::optional<Neighbor>& best = local[static_cast<std::size_t>(omp_get_thread_num())];
#pragma omp for schedule(static)
    for (std::size_t k = 0; k < n; ++k) {
      const std::size_t c = candidates[k];
      const Neighbor nb{Distance(query.data(), points.row(static_cast<Eigen::Index>(c)).data(), query.size()), c};
      if (!best || Closer(nb, *best)) best = nb;
    }
  }
  // The (distance, index) order is total, so the merge is order-independent.
  std::optional<Neighbor> best;
  for (const auto& l : local) {
    if (l && (!best || Closer(*l, *best))) best = l;
  }
  return best;
}

std::vector<double> PredictProba(const EnsembleModel& model, const RowMatrix& raw) {
  CheckRaw(model, raw);
  std::vector<double> p(raw.rows());
  const Eigen::Index n = raw.rows();
#pragma omp parallel for schedule(dynamic, 8)
  for (Eigen::Index i = 0; i < n; ++i) {
    p[i] = model.PredictProba(std::span<const double>(raw.row(i).data(), raw.cols()));
  }
  return p;
}

}  // namespace omp

}  // namespace tabrisk::kernels
