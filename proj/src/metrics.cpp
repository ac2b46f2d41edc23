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

#include "tabrisk/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>

#include "tabrisk/dataset.hpp"
#include "tabrisk/errors.hpp"
#include "tabrisk/rng.hpp"

namespace tabrisk {

namespace {

void CheckLabels(std::span<const int> labels) {
  for (int y : labels) {
    if (y != 0 && y != 1) throw InvalidArgument("labels must be 0 or 1");
  }
}

void CheckInputs(std::span<const int> labels, std::span<const double> probs) {
  if (labels.size() != probs.size()) throw InvalidArgument("labels and probabilities differ in length");
  if (labels.empty()) throw InvalidArgument("metrics need at least one case");
  CheckLabels(labels);
  for (double p : probs) {
    if (!(p >= 0.0 && p <= 1.0)) throw InvalidArgument("probabilities must lie in [0, 1]");
  }
}

double Ratio(std::size_t num, std::size_t den, const char* name, std::vector<std::string>& flags) {
  if (den == 0) {
    flags.emplace_back(name);
    return 0.0;
  }
  return static_cast<double>(num) / static_cast<double>(den);
}

double HarmonicF1(double a, double b, const char* name, std::vector<std::string>& flags) {
  if (a + b == 0.0) {
    flags.emplace_back(name);
    return 0.0;
  }
  return 2.0 * a * b / (a + b);
}

}  // namespace

ConfusionCounts Confusion(std::span<const int> labels, std::span<const int> preds) {
  if (labels.size() != preds.size()) throw InvalidArgument("labels and predictions differ in length");
  if (labels.empty()) throw InvalidArgument("confusion needs at least one case");
  CheckLabels(labels);
  CheckLabels(preds);
  ConfusionCounts c;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] == 1) {
      preds[i] == 1 ? ++c.tp : ++c.fn;
    } else {
      preds[i] == 1 ? ++c.fp : ++c.tn;
    }
  }
  return c;
}

MetricsReport ReportFromCounts(const ConfusionCounts& c) {
  MetricsReport r;
  r.counts = c;
  r.accuracy = Ratio(c.tp + c.tn, c.total(), "accuracy", r.degenerate);
  r.sensitivity = Ratio(c.tp, c.tp + c.fn, "sensitivity", r.degenerate);
  r.specificity = Ratio(c.tn, c.tn + c.fp, "specificity", r.degenerate);
  r.ppv = Ratio(c.tp, c.tp + c.fp, "ppv", r.degenerate);
  r.npv = Ratio(c.tn, c.tn + c.fn, "npv", r.degenerate);
  r.f1_pos = HarmonicF1(r.ppv, r.sensitivity, "f1_pos", r.degenerate);
  r.f1_neg = HarmonicF1(r.npv, r.specificity, "f1_neg", r.degenerate);
  r.macro_f1 = (r.f1_pos + r.f1_neg) / 2.0;
  return r;
}

double Bce(std::span<const int> labels, std::span<const double> probs) {
  CheckInputs(labels, probs);
  double sum = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const double p = std::clamp(probs[i], kProbClip, 1.0 - kProbClip);
    sum += labels[i] == 1 ? std::log(p) : std::log(1.0 - p);
  }
  return -sum / static_cast<double>(labels.size());
}

double Auroc(std::span<const int> labels, std::span<const double> probs) {
  CheckInputs(labels, probs);
  const RocCurve roc = ComputeRoc(labels, probs);
  // Points are ascending in threshold, hence descending in both rates.
  double area = 0.0;
  for (std::size_t i = 0; i + 1 < roc.points.size(); ++i) {
    const RocPoint& hi = roc.points[i];
    const RocPoint& lo = roc.points[i + 1];
    area += (hi.fpr - lo.fpr) * (hi.tpr + lo.tpr) / 2.0;
  }
  return area;
}

RocCurve ComputeRoc(std::span<const int> labels, std::span<const double> probs) {
  CheckInputs(labels, probs);
  std::size_t n_pos = 0;
  for (int y : labels) n_pos += static_cast<std::size_t>(y);
  const std::size_t n_neg = labels.size() - n_pos;
  if (n_pos == 0 || n_neg == 0) throw InvalidArgument("ROC needs both classes present");

  std::vector<std::size_t> order = Iota(labels.size());
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return probs[a] > probs[b]; });

  // Walk thresholds from high to low; each distinct score closes a tie group.
  std::vector<RocPoint> desc;
  desc.push_back({std::nextafter(probs[order.front()], std::numeric_limits<double>::infinity()),
                  0.0, 0.0});
  std::size_t tp = 0, fp = 0;
  for (std::size_t k = 0; k < order.size();) {
    const double score = probs[order[k]];
    while (k < order.size() && probs[order[k]] == score) {
      labels[order[k]] == 1 ? ++tp : ++fp;
      ++k;
    }
    desc.push_back({score, static_cast<double>(tp) / static_cast<double>(n_pos),
                    static_cast<double>(fp) / static_cast<double>(n_neg)});
  }
  RocCurve curve;
  curve.points.assign(desc.rbegin(), desc.rend());
  return curve;
}

MetricsReport ClassificationReport(std::span<const int> labels, std::span<const double> probs,
                                   double threshold) {
  CheckInputs(labels, probs);
  std::vector<int> preds(probs.size());
  for (std::size_t i = 0; i < probs.size(); ++i) preds[i] = Classify(probs[i], threshold);
  MetricsReport r = ReportFromCounts(Confusion(labels, preds));
  r.bce_loss = Bce(labels, probs);
  const bool both = r.counts.tp + r.counts.fn > 0 && r.counts.tn + r.counts.fp > 0;
  r.auroc_defined = both;
  if (both) {
    r.auroc = Auroc(labels, probs);
  } else {
    r.degenerate.emplace_back("auroc");
  }
  return r;
}

double MacroF1(std::span<const int> labels, std::span<const double> probs, double threshold) {
  CheckInputs(labels, probs);
  std::vector<int> preds(probs.size());
  for (std::size_t i = 0; i < probs.size(); ++i) preds[i] = Classify(probs[i], threshold);
  return ReportFromCounts(Confusion(labels, preds)).macro_f1;
}

RocSweep SweepThresholds(std::span<const int> labels, std::span<const double> probs,
                         std::span<const double> thresholds) {
  if (thresholds.empty()) throw InvalidArgument("threshold sweep needs at least one threshold");
  CheckInputs(labels, probs);
  std::size_t n_pos = 0;
  for (int y : labels) n_pos += static_cast<std::size_t>(y);
  if (n_pos == 0 || n_pos == labels.size()) throw InvalidArgument("ROC needs both classes present");
  std::vector<double> sorted(thresholds.begin(), thresholds.end());
  std::sort(sorted.begin(), sorted.end());
  RocSweep sweep;
  for (double t : sorted) {
    MetricsReport r = ClassificationReport(labels, probs, t);
    sweep.curve.points.push_back({t, r.sensitivity, 1.0 - r.specificity});
    sweep.reports.push_back(std::move(r));
  }
  return sweep;
}

DistributionGapReport DistributionGap(std::span<const double> fold_val_losses, double test_loss) {
  if (fold_val_losses.empty()) throw InvalidArgument("distribution gap needs fold losses");
  DistributionGapReport r;
  r.fold_val_losses.assign(fold_val_losses.begin(), fold_val_losses.end());
  r.mean_val_loss = std::accumulate(fold_val_losses.begin(), fold_val_losses.end(), 0.0) /
                    static_cast<double>(fold_val_losses.size());
  if (!(r.mean_val_loss > 0.0)) {
    throw InvalidArgument("mean validation loss must be positive for a distribution gap");
  }
  r.test_loss = test_loss;
  r.gap_percent = (test_loss - r.mean_val_loss) / r.mean_val_loss * 100.0;
  return r;
}

nlohmann::json MetricsReport::ToJson() const {
  return {
      {"counts", {{"tp", counts.tp}, {"tn", counts.tn}, {"fp", counts.fp}, {"fn", counts.fn}}},
      {"loss", bce_loss},
      {"accuracy", accuracy},
      {"sensitivity", sensitivity},
      {"specificity", specificity},
      {"ppv", ppv},
      {"npv", npv},
      {"f1_pos", f1_pos},
      {"f1_neg", f1_neg},
      {"avg_f1", macro_f1},
      {"auroc", auroc},
      {"auroc_defined", auroc_defined},
      {"degenerate", degenerate},
  };
}

MetricsReport MetricsReport::FromJson(const nlohmann::json& j) {
  MetricsReport r;
  const auto& c = j.at("counts");
  r.counts = {c.at("tp").get<std::size_t>(), c.at("tn").get<std::size_t>(),
              c.at("fp").get<std::size_t>(), c.at("fn").get<std::size_t>()};
  r.bce_loss = j.at("loss").get<double>();
  r.accuracy = j.at("accuracy").get<double>();
  r.sensitivity = j.at("sensitivity").get<double>();
  r.specificity = j.at("specificity").get<double>();
  r.ppv = j.at("ppv").get<double>();
  r.npv = j.at("npv").get<double>();
  r.f1_pos = j.at("f1_pos").get<double>();
  r.f1_neg = j.at("f1_neg").get<double>();
  r.macro_f1 = j.at("avg_f1").get<double>();
  r.auroc = j.at("auroc").get<double>();
  r.auroc_defined = j.value("auroc_defined", false);
  r.degenerate = j.value("degenerate", std::vector<std::string>{});
  return r;
}

nlohmann::json RocCurve::ToJson() const {
  nlohmann::json pts = nlohmann::json::array();
  for (const RocPoint& p : points) pts.push_back({{"threshold", p.threshold}, {"tpr", p.tpr}, {"fpr", p.fpr}});
  return pts;
}

void RocCurve::WriteCsv(std::ostream& out) const {
  out << "threshold,tpr,fpr\n";
  for (const RocPoint& p : points) {
    out << FormatNumber(p.threshold) << ',' << FormatNumber(p.tpr) << ',' << FormatNumber(p.fpr)
        << '\n';
  }
}

nlohmann::json DistributionGapReport::ToJson() const {
  return {{"fold_val_losses", fold_val_losses},
          {"mean_val_loss", mean_val_loss},
          {"test_loss", test_loss},
          {"gap_percent", gap_percent}};
}

}  // namespace tabrisk
