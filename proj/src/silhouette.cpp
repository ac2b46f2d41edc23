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

#include <algorithm>

#include "tabrisk/augment.hpp"
#include "tabrisk/errors.hpp"

namespace tabrisk {

namespace {

void CheckTwoClass(std::size_t n_points, std::span<const int> labels) {
  if (n_points != labels.size()) throw InvalidArgument("one label per point required");
  if (n_points < 2) throw InvalidArgument("silhouette needs at least two points");
  bool has0 = false, has1 = false;
  for (int y : labels) {
    if (y != 0 && y != 1) throw InvalidArgument("silhouette labels must be 0 or 1");
    (y == 1 ? has1 : has0) = true;
  }
  if (!has0 || !has1) throw InvalidArgument("silhouette needs both classes present");
}

// Per-point sums already include the zero self-distance.
double MeanSilhouette(std::span<const double> to0, std::span<const double> to1,
                      std::span<const int> labels) {
  std::size_t n1 = 0;
  for (int y : labels) n1 += static_cast<std::size_t>(y);
  const std::size_t n0 = labels.size() - n1;
  double total = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const bool pos = labels[i] == 1;
    const std::size_t same_n = pos ? n1 : n0;
    const std::size_t other_n = pos ? n0 : n1;
    if (same_n <= 1) continue;
    const double a = (pos ? to1[i] : to0[i]) / static_cast<double>(same_n - 1);
    const double b = (pos ? to0[i] : to1[i]) / static_cast<double>(other_n);
    const double m = std::max(a, b);
    if (m > 0.0) total += (b - a) / m;
  }
  return total / static_cast<double>(labels.size());
}

}  // namespace

double SilhouetteScore(const RowMatrix& points, std::span<const int> labels) {
  CheckTwoClass(static_cast<std::size_t>(points.rows()), labels);
  const kernels::ClassDistanceSums sums = kernels::omp::DistanceSumsByClass(points, points, labels);
  return MeanSilhouette(sums.to0, sums.to1, labels);
}

double SilhouetteTracker::ScoreFromSums(const std::vector<double>& to0,
                                        const std::vector<double>& to1,
                                        std::span<const int> labels) {
  return MeanSilhouette(to0, to1, labels);
}

SilhouetteTracker::SilhouetteTracker(RowMatrix points, std::vector<int> labels)
    : points_(std::move(points)), labels_(std::move(labels)) {
  CheckTwoClass(static_cast<std::size_t>(points_.rows()), labels_);
  kernels::ClassDistanceSums sums = kernels::omp::DistanceSumsByClass(points_, points_, labels_);
  to0_ = std::move(sums.to0);
  to1_ = std::move(sums.to1);
  score_ = ScoreFromSums(to0_, to1_, labels_);
}

SilhouetteTracker::Candidate SilhouetteTracker::Evaluate(RowMatrix batch,
                                                         std::vector<int> labels) const {
  if (static_cast<std::size_t>(batch.rows()) != labels.size()) {
    throw InvalidArgument("one label per batch row required");
  }
  if (batch.cols() != points_.cols()) throw InvalidArgument("batch width does not match tracker");
  Candidate c;
  c.existing_delta = kernels::omp::DistanceSumsByClass(points_, batch, labels);
  c.new_sums = kernels::omp::DistanceSumsByClass(batch, points_, labels_);
  const kernels::ClassDistanceSums within = kernels::omp::DistanceSumsByClass(batch, batch, labels);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    c.new_sums.to0[i] += within.to0[i];
    c.new_sums.to1[i] += within.to1[i];
  }
  std::vector<double> to0 = to0_, to1 = to1_;
  for (std::size_t i = 0; i < to0.size(); ++i) {
    to0[i] += c.existing_delta.to0[i];
    to1[i] += c.existing_delta.to1[i];
  }
  to0.insert(to0.end(), c.new_sums.to0.begin(), c.new_sums.to0.end());
  to1.insert(to1.end(), c.new_sums.to1.begin(), c.new_sums.to1.end());
  std::vector<int> all = labels_;
  all.insert(all.end(), labels.begin(), labels.end());
  c.score = ScoreFromSums(to0, to1, all);
  c.points = std::move(batch);
  c.labels = std::move(labels);
  return c;
}

void SilhouetteTracker::Commit(Candidate candidate) {
  for (std::size_t i = 0; i < to0_.size(); ++i) {
    to0_[i] += candidate.existing_delta.to0[i];
    to1_[i] += candidate.existing_delta.to1[i];
  }
  to0_.insert(to0_.end(), candidate.new_sums.to0.begin(), candidate.new_sums.to0.end());
  to1_.insert(to1_.end(), candidate.new_sums.to1.begin(), candidate.new_sums.to1.end());
  const Eigen::Index old_rows = points_.rows();
  points_.conservativeResize(old_rows + candidate.points.rows(), Eigen::NoChange);
  points_.bottomRows(candidate.points.rows()) = candidate.points;
  labels_.insert(labels_.end(), candidate.labels.begin(), candidate.labels.end());
  score_ = candidate.score;
}

}  // namespace tabrisk
