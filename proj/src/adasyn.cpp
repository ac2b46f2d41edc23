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
#include <cmath>

#include "tabrisk/augment.hpp"
#include "tabrisk/errors.hpp"
#include "tabrisk/rng.hpp"

namespace tabrisk {

namespace {

// Binary and one-hot slots snap to the nearer endpoint instead of blending.
std::vector<char> SnappedSlots(const FeatureSchema& schema) {
  std::vector<char> snapped(schema.width(), 0);
  for (std::size_t i = 0; i < schema.num_features(); ++i) {
    const FeatureSpec& f = schema.feature(i);
    if (f.kind == FeatureKind::kNumeric) continue;
    for (std::size_t s = 0; s < f.width(); ++s) snapped[schema.offset(i) + s] = 1;
  }
  return snapped;
}

// Largest-remainder apportionment of n over weights; ties go to lower index.
std::vector<std::size_t> Apportion(std::size_t n, const std::vector<double>& weights) {
  const std::size_t m = weights.size();
  std::vector<std::size_t> out(m, 0);
  std::vector<double> frac(m, 0.0);
  std::size_t given = 0;
  for (std::size_t i = 0; i < m; ++i) {
    const double share = static_cast<double>(n) * weights[i];
    out[i] = static_cast<std::size_t>(std::floor(share));
    frac[i] = share - std::floor(share);
    given += out[i];
  }
  std::vector<std::size_t> order = Iota(m);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return frac[a] > frac[b]; });
  for (std::size_t k = 0; given < n; k = (k + 1) % m) {
    ++out[order[k]];
    ++given;
  }
  // Floors never exceed the total, so trimming is only a rounding guard.
  for (std::size_t k = m; given > n && k-- > 0;) {
    if (out[order[k]] > 0) {
      --out[order[k]];
      --given;
    }
  }
  return out;
}

}  // namespace

AdasynOutput AdasynOversample(const Dataset& dataset, int target_class, std::size_t n_new,
                              std::size_t k, std::uint64_t seed) {
  if (target_class != 0 && target_class != 1) throw InvalidArgument("target class must be 0 or 1");
  if (k == 0) throw InvalidArgument("k must be at least 1");
  AdasynOutput out;
  if (n_new == 0) return out;

  std::vector<std::size_t> all = Iota(dataset.size());
  std::vector<int> labels = dataset.Labels();
  std::size_t others = 0;
  for (std::size_t r = 0; r < labels.size(); ++r) {
    if (labels[r] == target_class) {
      out.minority_rows.push_back(r);
    } else {
      ++others;
    }
  }
  if (out.minority_rows.size() < k + 1) {
    throw InvalidArgument("ADASYN needs at least k+1 = " + std::to_string(k + 1) +
                          " records of the target class, found " +
                          std::to_string(out.minority_rows.size()));
  }
  if (others == 0) throw InvalidArgument("ADASYN needs at least one record of the other class");

  const ScalerParams scaler = FitMinMax(dataset);
  const RowMatrix points = ToRowMatrix(dataset, &scaler);
  const auto knn_all = kernels::omp::KNearest(points, out.minority_rows, all, k);
  const auto knn_min = kernels::omp::KNearest(points, out.minority_rows, out.minority_rows, k);

  const std::size_t m = out.minority_rows.size();
  out.density.resize(m);
  double total = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    std::size_t opposite = 0;
    for (std::size_t nb : knn_all[i]) opposite += labels[nb] != target_class ? 1 : 0;
    out.density[i] = static_cast<double>(opposite) / static_cast<double>(k);
    total += out.density[i];
  }
  std::vector<double> weights(m, 1.0 / static_cast<double>(m));
  if (total > 0.0) {
    for (std::size_t i = 0; i < m; ++i) weights[i] = out.density[i] / total;
  }
  out.allocation = Apportion(n_new, weights);

  const std::vector<char> snapped = SnappedSlots(dataset.schema());
  const std::size_t d = dataset.schema().width();
  Rng rng(seed);
  out.records.reserve(n_new);
  out.trace.reserve(n_new);
  for (std::size_t i = 0; i < m; ++i) {
    const std::vector<double>& base = dataset.record(out.minority_rows[i]).x;
    for (std::size_t g = 0; g < out.allocation[i]; ++g) {
      const std::size_t nb_row = knn_min[i][rng.Index(knn_min[i].size())];
      const std::vector<double>& nb = dataset.record(nb_row).x;
      const double lambda = rng.Uniform();
      CaseRecord rec;
      rec.y = target_class;
      rec.x.resize(d);
      for (std::size_t j = 0; j < d; ++j) {
        rec.x[j] = snapped[j] ? (lambda <= 0.5 ? base[j] : nb[j]) : base[j] + lambda * (nb[j] - base[j]);
      }
      out.records.push_back(std::move(rec));
      out.trace.push_back({out.minority_rows[i], nb_row, lambda});
    }
  }
  return out;
}

std::pair<Dataset, AugmentReport> AdasynBalanceLoop(const Dataset& dataset,
                                                    const AugmentConfig& config) {
  config.Validate();
  std::size_t pos = dataset.CountLabel(1);
  std::size_t neg = dataset.CountLabel(0);
  if (pos == 0 || neg == 0) throw InvalidArgument("ADASYN balancing needs both classes present");
  const std::size_t n_orig = dataset.size();
  std::size_t target = std::max<std::size_t>(
      config.min_per_class,
      static_cast<std::size_t>(std::ceil(config.size_multiplier * static_cast<double>(n_orig) / 2.0)));
  target = std::max({target, pos, neg});

  AugmentReport report;
  report.method = ToString(AugmentMethod::kAdasyn);
  report.restriction = ToString(Restriction::kNone);
  report.input_size = n_orig;
  report.silhouette_min = config.silhouette_min;
  report.phases = {{"positive_to_parity", 1, 0, 0, 0}, {"negative_subsets", 0, 0, 0, 0}};

  Dataset current = dataset;
  Rng rng(config.seed);
  const std::size_t k = config.k_neighbors;
  const std::size_t m_min = (5 * (k + 1) + 3) / 4;  // smallest m with floor(0.8 m) >= k + 1

  auto add = [&](std::vector<CaseRecord> recs, PhaseReport& phase) {
    recs = PostprocessGenerated(std::move(recs), config.postprocess, dataset.schema());
    phase.generated += recs.size();
    phase.accepted += recs.size();
    for (CaseRecord& r : recs) current.Add(std::move(r), Provenance::kSynthetic);
  };

  while (pos != target || neg != target) {
    if (++report.iterations > config.max_iterations) {
      throw Error("ADASYN balancing did not terminate within " +
                  std::to_string(config.max_iterations) + " iterations");
    }
    const std::size_t parity = std::min(neg, target);
    if (pos < parity) {
      const std::size_t n_new = parity - pos;
      add(AdasynOversample(current, 1, n_new, k, rng.Fork()).records, report.phases[0]);
      pos += n_new;
    }
    if (neg < target) {
      std::vector<std::size_t> pos_rows, neg_rows;
      for (std::size_t r = 0; r < current.size(); ++r) {
        (*current.record(r).y == 1 ? pos_rows : neg_rows).push_back(r);
      }
      const std::size_t m_max = std::min(pos_rows.size(), neg_rows.size() * 5 / 4);
      if (m_max < m_min) {
        throw InvalidArgument("too few records to draw ADASYN subsets with k = " + std::to_string(k));
      }
      const std::size_t m = static_cast<std::size_t>(
          rng.Between(static_cast<long long>(m_min), static_cast<long long>(m_max)));
      const std::size_t m_neg = m * 4 / 5;
      rng.Shuffle(pos_rows);
      rng.Shuffle(neg_rows);
      std::vector<std::size_t> rows(pos_rows.begin(), pos_rows.begin() + static_cast<std::ptrdiff_t>(m));
      rows.insert(rows.end(), neg_rows.begin(), neg_rows.begin() + static_cast<std::ptrdiff_t>(m_neg));
      std::sort(rows.begin(), rows.end());
      const std::size_t n_new = std::min(m - m_neg, target - neg);
      add(AdasynOversample(current.Subset(rows), 0, n_new, k, rng.Fork()).records, report.phases[1]);
      neg += n_new;
    }
  }
  report.final_positive = pos;
  report.final_negative = neg;
  return {std::move(current), std::move(report)};
}

}  // namespace tabrisk
