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

#include "tabrisk/explain.hpp"

#include <algorithm>
#include <cmath>

#include "tabrisk/errors.hpp"
#include "tabrisk/kernels.hpp"
#include "tabrisk/metrics.hpp"
#include "tabrisk/rng.hpp"

namespace tabrisk {

namespace {

void CopyFeature(const FeatureSchema& schema, std::size_t feature, std::span<const double> from,
                 std::span<double> to) {
  const std::size_t off = schema.offset(feature);
  for (std::size_t s = 0; s < schema.feature(feature).width(); ++s) to[off + s] = from[off + s];
}

double ScaledDistance(const ScalerParams& scaler, std::span<const double> a, std::span<const double> b) {
  const std::vector<double> za = scaler.Transform(a);
  const std::vector<double> zb = scaler.Transform(b);
  return kernels::Distance(za.data(), zb.data(), za.size());
}

void MeanStd(const std::vector<double>& v, double& mean, double& sd) {
  mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  sd = std::sqrt(ss / static_cast<double>(v.size()));
}

}  // namespace

std::vector<std::size_t> DifferingFeatures(const FeatureSchema& schema, std::span<const double> a,
                                           std::span<const double> b) {
  if (a.size() != schema.width() || b.size() != schema.width()) {
    throw InvalidArgument("record width does not match the schema");
  }
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < schema.num_features(); ++i) {
    const std::size_t off = schema.offset(i);
    for (std::size_t s = 0; s < schema.feature(i).width(); ++s) {
      if (a[off + s] != b[off + s]) {
        out.push_back(i);
        break;
      }
    }
  }
  return out;
}

nlohmann::json Counterfactual::ToJson(const FeatureSchema& schema) const {
  nlohmann::json steps = nlohmann::json::array();
  for (const CounterfactualStep& s : trace) {
    steps.push_back({{"features", s.features}, {"probability", s.probability}});
  }
  return {{"original", DecodeFeatureMap(schema, original.x)},
          {"counterfactual", DecodeFeatureMap(schema, counterfactual.x)},
          {"changed_features", changed_features},
          {"sparsity", sparsity()},
          {"distance", distance},
          {"original_prob", original_prob},
          {"counterfactual_prob", counterfactual_prob},
          {"flipped", flipped},
          {"neighbor_index", neighbor_index},
          {"trace", steps}};
}

nlohmann::json CeReport::ToJson() const {
  return {{"n_cases", n_cases},           {"max_changes", max_changes},
          {"accuracy", accuracy},         {"distance_mean", distance_mean},
          {"distance_std", distance_std}, {"sparsity_mean", sparsity_mean},
          {"sparsity_std", sparsity_std}};
}

CounterfactualSearch::CounterfactualSearch(const EnsembleModel& model, Dataset pool)
    : model_(model), pool_(std::move(pool)) {
  if (!(pool_.schema() == *model_.schema)) throw InvalidArgument("pool schema does not match the model");
  pool_scaled_ = ToRowMatrix(pool_, &model_.scaler);
  const std::vector<double> probs = kernels::omp::PredictProba(model_, ToRowMatrix(pool_, nullptr));
  pool_classes_.reserve(probs.size());
  for (double p : probs) pool_classes_.push_back(Classify(p, model_.threshold));
}

std::size_t CounterfactualSearch::NearestUnlikeNeighbor(std::span<const double> x) const {
  const int cls = Classify(model_.PredictProba(x), model_.threshold);
  std::vector<std::size_t> candidates;
  for (std::size_t r = 0; r < pool_classes_.size(); ++r) {
    if (pool_classes_[r] != cls) candidates.push_back(r);
  }
  const std::vector<double> z = model_.scaler.Transform(x);
  const auto nb = kernels::omp::Nearest(z, pool_scaled_, candidates);
  if (!nb) throw InvalidArgument("no pool record is classified opposite to the case");
  return nb->index;
}

Counterfactual CounterfactualSearch::Generate(const CaseRecord& x, std::size_t max_changes) const {
  const FeatureSchema& schema = *model_.schema;
  if (x.x.size() != schema.width()) throw InvalidArgument("case width does not match the schema");
  Counterfactual cf;
  cf.original = x;
  cf.counterfactual = x;
  cf.original_prob = cf.counterfactual_prob = model_.PredictProba(x.x);
  if (max_changes == 0) return cf;

  const int c0 = Classify(cf.original_prob, model_.threshold);
  auto toward = [c0](double p) { return c0 == 1 ? -p : p; };
  cf.neighbor_index = NearestUnlikeNeighbor(x.x);
  const std::vector<double>& z = pool_.record(cf.neighbor_index).x;
  std::vector<std::size_t> remaining = DifferingFeatures(schema, x.x, z);
  std::vector<double> current = x.x;
  double p = cf.original_prob;
  std::size_t changed = 0;
  bool flipped = false;

  while (!flipped && changed < max_changes && !remaining.empty()) {
    RowMatrix cand(static_cast<Eigen::Index>(remaining.size()), static_cast<Eigen::Index>(current.size()));
    for (std::size_t i = 0; i < remaining.size(); ++i) {
      std::vector<double> row = current;
      CopyFeature(schema, remaining[i], z, row);
      cand.row(static_cast<Eigen::Index>(i)) = Eigen::Map<const Eigen::RowVectorXd>(row.data(), static_cast<Eigen::Index>(row.size()));
    }
    const std::vector<double> probs = kernels::omp::PredictProba(model_, cand);
    std::size_t best = 0;
    for (std::size_t i = 1; i < probs.size(); ++i) {
      if (toward(probs[i]) > toward(probs[best])) best = i;
    }
    CounterfactualStep step;
    if (toward(probs[best]) > toward(p)) {
      CopyFeature(schema, remaining[best], z, current);
      p = probs[best];
      step.features.push_back(schema.feature(remaining[best]).name);
      remaining.erase(remaining.begin() + static_cast<std::ptrdiff_t>(best));
      ++changed;
    } else if (changed + remaining.size() <= max_changes) {
      // No single copy helps; take the rest of the neighbor at once.
      for (std::size_t f : remaining) {
        CopyFeature(schema, f, z, current);
        step.features.push_back(schema.feature(f).name);
      }
      changed += remaining.size();
      remaining.clear();
      p = model_.PredictProba(current);
    } else {
      break;
    }
    step.probability = p;
    cf.trace.push_back(std::move(step));
    flipped = Classify(p, model_.threshold) != c0;
  }

  cf.counterfactual.x = current;
  cf.counterfactual_prob = p;
  cf.flipped = flipped;
  for (std::size_t f : DifferingFeatures(schema, x.x, current)) {
    cf.changed_features.push_back(schema.feature(f).name);
  }
  cf.distance = ScaledDistance(model_.scaler, x.x, current);
  return cf;
}

std::size_t NearestUnlikeNeighbor(const CaseRecord& x, const Dataset& pool,
                                  const EnsembleModel& model) {
  return CounterfactualSearch(model, pool).NearestUnlikeNeighbor(x.x);
}

Counterfactual GenerateCounterfactual(const CaseRecord& x, const EnsembleModel& model,
                                      const Dataset& pool, std::size_t max_changes) {
  return CounterfactualSearch(model, pool).Generate(x, max_changes);
}

CeReport SummarizeCounterfactuals(std::span<const Counterfactual> cfs, std::size_t max_changes) {
  if (cfs.empty()) throw InvalidArgument("counterfactual evaluation needs at least one case");
  CeReport r;
  r.n_cases = cfs.size();
  r.max_changes = max_changes;
  std::vector<double> dist, sparsity;
  double flipped = 0.0;
  for (const Counterfactual& c : cfs) {
    flipped += c.flipped ? 1.0 : 0.0;
    dist.push_back(c.distance);
    sparsity.push_back(static_cast<double>(c.sparsity()));
  }
  r.accuracy = flipped / static_cast<double>(cfs.size());
  MeanStd(dist, r.distance_mean, r.distance_std);
  MeanStd(sparsity, r.sparsity_mean, r.sparsity_std);
  return r;
}

CeReport EvaluateCounterfactuals(std::span<const CaseRecord> cases, const EnsembleModel& model,
                                 const Dataset& pool, std::size_t max_changes,
                                 std::vector<Counterfactual>* out) {
  if (cases.empty()) throw InvalidArgument("counterfactual evaluation needs at least one case");
  const CounterfactualSearch search(model, pool);
  std::vector<Counterfactual> cfs;
  cfs.reserve(cases.size());
  for (const CaseRecord& c : cases) cfs.push_back(search.Generate(c, max_changes));
  CeReport r = SummarizeCounterfactuals(cfs, max_changes);
  if (out) *out = std::move(cfs);
  return r;
}

double Attribution::EfficiencyResidual() const {
  double s = 0.0;
  for (double v : values) s += v;
  return s - (prediction - baseline);
}

nlohmann::json Attribution::ToJson() const {
  nlohmann::json feats = nlohmann::json::array();
  for (std::size_t i = 0; i < features.size(); ++i) {
    feats.push_back({{"name", features[i]}, {"value", values[i]}, {"std_error", std_errors[i]}});
  }
  return {{"features", feats},
          {"baseline", baseline},
          {"prediction", prediction},
          {"n_samples", n_samples},
          {"efficiency_residual", EfficiencyResidual()}};
}

void Attribution::WriteCsv(std::ostream& out) const {
  out << "feature,value\n";
  for (std::size_t i = 0; i < features.size(); ++i) {
    out << features[i] << ',' << FormatNumber(values[i]) << '\n';
  }
}

Attribution ShapleyAttribution(const BatchScoreFn& f, const FeatureSchema& schema,
                               std::span<const double> x, const Dataset& background,
                               std::size_t n_samples, std::uint64_t seed) {
  if (background.empty()) throw InvalidArgument("attribution needs a non-empty background set");
  if (n_samples < 1) throw InvalidArgument("attribution needs n_samples >= 1");
  if (x.size() != schema.width()) throw InvalidArgument("case width does not match the schema");
  const std::size_t nf = schema.num_features();
  const auto d = static_cast<Eigen::Index>(schema.width());
  const RowMatrix bg = ToRowMatrix(background, nullptr);

  Attribution a;
  a.n_samples = n_samples;
  for (const FeatureSpec& spec : schema.features()) a.features.push_back(spec.name);
  {
    const std::vector<double> pb = f(bg);
    for (double v : pb) a.baseline += v;
    a.baseline /= static_cast<double>(pb.size());
    RowMatrix xr(1, d);
    for (Eigen::Index s = 0; s < d; ++s) xr(0, s) = x[static_cast<std::size_t>(s)];
    a.prediction = f(xr).at(0);
  }

  Rng rng(seed);
  std::vector<std::size_t> cycle = Iota(background.size());
  std::size_t next = cycle.size();
  std::vector<double> sum(nf, 0.0), sumsq(nf, 0.0);
  const std::size_t per_batch = std::max<std::size_t>(1, 4096 / (nf + 1));
  const auto rows_per_sample = static_cast<Eigen::Index>(nf + 1);

  for (std::size_t done = 0; done < n_samples;) {
    const std::size_t p = std::min(per_batch, n_samples - done);
    RowMatrix walk(static_cast<Eigen::Index>(p) * rows_per_sample, d);
    std::vector<std::vector<std::size_t>> perms(p);
    for (std::size_t s = 0; s < p; ++s) {
      perms[s] = Iota(nf);
      rng.Shuffle(perms[s]);
      if (next == cycle.size()) {
        rng.Shuffle(cycle);
        next = 0;
      }
      const Eigen::Index base = static_cast<Eigen::Index>(s) * rows_per_sample;
      walk.row(base) = bg.row(static_cast<Eigen::Index>(cycle[next++]));
      for (std::size_t k = 0; k < nf; ++k) {
        const Eigen::Index r = base + static_cast<Eigen::Index>(k) + 1;
        walk.row(r) = walk.row(r - 1);
        const std::size_t feat = perms[s][k];
        const std::size_t off = schema.offset(feat);
        for (std::size_t w = 0; w < schema.feature(feat).width(); ++w) {
          walk(r, static_cast<Eigen::Index>(off + w)) = x[off + w];
        }
      }
    }
    const std::vector<double> out = f(walk);
    for (std::size_t s = 0; s < p; ++s) {
      const std::size_t base = s * (nf + 1);
      for (std::size_t k = 0; k < nf; ++k) {
        const double delta = out[base + k + 1] - out[base + k];
        sum[perms[s][k]] += delta;
        sumsq[perms[s][k]] += delta * delta;
      }
    }
    done += p;
  }

  const auto n = static_cast<double>(n_samples);
  for (std::size_t j = 0; j < nf; ++j) {
    const double mean = sum[j] / n;
    a.values.push_back(mean);
    const double var = n > 1.0 ? std::max(0.0, (sumsq[j] - n * mean * mean) / (n - 1.0)) : 0.0;
    a.std_errors.push_back(std::sqrt(var / n));
  }
  return a;
}

Attribution ShapleyAttribution(const EnsembleModel& model, std::span<const double> x,
                               const Dataset& background, std::size_t n_samples,
                               std::uint64_t seed) {
  if (!(background.schema() == *model.schema)) {
    throw InvalidArgument("background schema does not match the model");
  }
  if (x.size() != model.schema->width()) throw InvalidArgument("case width does not match the schema");
  for (double v : x) {
    if (!std::isfinite(v)) throw InvalidArgument("case contains a non-finite value");
  }
  return ShapleyAttribution([&model](const RowMatrix& m) { return model.PredictProbaBatch(m); },
                            *model.schema, x, background, n_samples, seed);
}

}  // namespace tabrisk
