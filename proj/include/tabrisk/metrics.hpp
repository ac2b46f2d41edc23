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

#ifndef TABRISK_METRICS_HPP_
#define TABRISK_METRICS_HPP_

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

namespace tabrisk {

// Probability clipping used by every cross-entropy computation.
inline constexpr double kProbClip = 1e-7;

// 1 iff p >= threshold.
inline int Classify(double p, double threshold) { return p >= threshold ? 1 : 0; }

struct ConfusionCounts {
  std::size_t tp = 0;
  std::size_t tn = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;

  std::size_t total() const { return tp + tn + fp + fn; }
  bool operator==(const ConfusionCounts&) const = default;
};

ConfusionCounts Confusion(std::span<const int> labels, std::span<const int> preds);

struct MetricsReport {
  ConfusionCounts counts;
  double accuracy = 0.0;
  double sensitivity = 0.0;
  double specificity = 0.0;
  double ppv = 0.0;
  double npv = 0.0;
  double f1_pos = 0.0;
  double f1_neg = 0.0;
  double macro_f1 = 0.0;
  double auroc = 0.0;
  double bce_loss = 0.0;
  // Rates whose denominator was zero; those are reported as 0.
  std::vector<std::string> degenerate;
  bool auroc_defined = false;

  nlohmann::json ToJson() const;
  static MetricsReport FromJson(const nlohmann::json& j);
};

// Rates from counts only; auroc and bce_loss are left at 0.
MetricsReport ReportFromCounts(const ConfusionCounts& counts);

// Thresholded confusion followed by the rate formulas, plus AUROC (when both
// classes are present) and BCE.
MetricsReport ClassificationReport(std::span<const int> labels, std::span<const double> probs,
                                   double threshold);

// Mean negated log-likelihood with probabilities clipped to
// [kProbClip, 1 - kProbClip].
double Bce(std::span<const int> labels, std::span<const double> probs);

double MacroF1(std::span<const int> labels, std::span<const double> probs, double threshold);

// Trapezoidal area under the ROC over all distinct score thresholds; ties
// between a positive and a negative count one half.
double Auroc(std::span<const int> labels, std::span<const double> probs);

struct RocPoint {
  double threshold;
  double tpr;
  double fpr;
};

struct RocCurve {
  std::vector<RocPoint> points;  // ascending threshold

  nlohmann::json ToJson() const;
  void WriteCsv(std::ostream& out) const;
};

// Full curve: one point per distinct score plus the (0,0) endpoint at
// threshold +inf, which is written as the largest score's successor.
RocCurve ComputeRoc(std::span<const int> labels, std::span<const double> probs);

struct RocSweep {
  RocCurve curve;
  std::vector<MetricsReport> reports;  // aligned with curve.points
};

// One curve point and one report per requested threshold, sorted ascending.
RocSweep SweepThresholds(std::span<const int> labels, std::span<const double> probs,
                         std::span<const double> thresholds);

struct DistributionGapReport {
  std::vector<double> fold_val_losses;
  double mean_val_loss = 0.0;
  double test_loss = 0.0;
  double gap_percent = 0.0;

  nlohmann::json ToJson() const;
};

// gap = (test - mean(fold losses)) / mean(fold losses) * 100.
DistributionGapReport DistributionGap(std::span<const double> fold_val_losses, double test_loss);

}  // namespace tabrisk

#endif  // TABRISK_METRICS_HPP_
