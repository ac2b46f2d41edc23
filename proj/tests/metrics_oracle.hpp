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

#ifndef TABRISK_TESTS_METRICS_ORACLE_HPP_
#define TABRISK_TESTS_METRICS_ORACLE_HPP_

// Independent enumeration oracles for the evaluation formulas.

#include <cstddef>
#include <vector>

namespace tabrisk::oracle {

struct Rates {
  double accuracy, sensitivity, specificity, ppv, npv, f1_pos, f1_neg;
};

inline double Ratio(double a, double b) { return b == 0.0 ? 0.0 : a / b; }

inline Rates BruteRates(const std::vector<int>& y, const std::vector<double>& p, double t) {
  double tp = 0, tn = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const bool pos = p[i] >= t;
    if (y[i] == 1 && pos) tp += 1;
    if (y[i] == 0 && !pos) tn += 1;
    if (y[i] == 0 && pos) fp += 1;
    if (y[i] == 1 && !pos) fn += 1;
  }
  Rates r{};
  r.accuracy = Ratio(tp + tn, tp + tn + fp + fn);
  r.sensitivity = Ratio(tp, tp + fn);
  r.specificity = Ratio(tn, tn + fp);
  r.ppv = Ratio(tp, tp + fp);
  r.npv = Ratio(tn, tn + fn);
  r.f1_pos = Ratio(2 * r.ppv * r.sensitivity, r.ppv + r.sensitivity);
  r.f1_neg = Ratio(2 * r.npv * r.specificity, r.npv + r.specificity);
  return r;
}

// Probability that a random positive outscores a random negative, ties 1/2.
inline double PairAuroc(const std::vector<int>& y, const std::vector<double>& p) {
  double wins = 0, pairs = 0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (y[i] != 1) continue;
    for (std::size_t j = 0; j < y.size(); ++j) {
      if (y[j] != 0) continue;
      pairs += 1;
      if (p[i] > p[j]) wins += 1;
      else if (p[i] == p[j]) wins += 0.5;
    }
  }
  return wins / pairs;
}

}  // namespace tabrisk::oracle

#endif  // TABRISK_TESTS_METRICS_ORACLE_HPP_
