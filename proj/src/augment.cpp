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

std::string ToString(AugmentMethod m) {
  return m == AugmentMethod::kAdasyn ? "adasyn" : "ctgan";
}

std::string ToString(Restriction r) {
  switch (r) {
    case Restriction::kNone: return "none";
    case Restriction::kNegativeOnly: return "negative_only";
    case Restriction::kBoth: return "both";
  }
  return "none";
}

std::string ToString(PostprocessMode m) {
  switch (m) {
    case PostprocessMode::kFloatAllowNegative: return "float_allow_negative";
    case PostprocessMode::kFloatClampNonneg: return "float_clamp_nonneg";
    case PostprocessMode::kRoundInt: return "round_int";
  }
  return "float_allow_negative";
}

AugmentMethod ParseAugmentMethod(const std::string& s) {
  if (s == "adasyn") return AugmentMethod::kAdasyn;
  if (s == "ctgan") return AugmentMethod::kCtgan;
  throw InvalidArgument("unknown augmentation method '" + s + "'");
}

Restriction ParseRestriction(const std::string& s) {
  if (s == "none") return Restriction::kNone;
  if (s == "negative_only") return Restriction::kNegativeOnly;
  if (s == "both") return Restriction::kBoth;
  throw InvalidArgument("unknown restriction '" + s + "'");
}

PostprocessMode ParsePostprocessMode(const std::string& s) {
  if (s == "float_allow_negative") return PostprocessMode::kFloatAllowNegative;
  if (s == "float_clamp_nonneg") return PostprocessMode::kFloatClampNonneg;
  if (s == "round_int") return PostprocessMode::kRoundInt;
  throw InvalidArgument("unknown postprocess mode '" + s + "'");
}

void AugmentConfig::Validate() const {
  if (!(size_multiplier >= 1.0)) throw InvalidArgument("size_multiplier must be >= 1");
  if (!(silhouette_min > -1.0 && silhouette_min < 1.0)) {
    throw InvalidArgument("silhouette_min must lie in (-1, 1)");
  }
  if (k_neighbors < 1) throw InvalidArgument("k_neighbors must be >= 1");
  if (batch_size_generated < 1) throw InvalidArgument("batch_size_generated must be >= 1");
  if (max_iterations < 1) throw InvalidArgument("max_iterations must be >= 1");
  if (max_consecutive_discards < 1) throw InvalidArgument("max_consecutive_discards must be >= 1");
}

nlohmann::json AugmentConfig::ToJson() const {
  return {{"method", ToString(method)},
          {"size_multiplier", size_multiplier},
          {"min_per_class", min_per_class},
          {"restriction", ToString(restriction)},
          {"silhouette_min", silhouette_min},
          {"postprocess", ToString(postprocess)},
          {"k_neighbors", k_neighbors},
          {"batch_size_generated", batch_size_generated},
          {"seed", seed},
          {"max_iterations", max_iterations},
          {"max_consecutive_discards", max_consecutive_discards}};
}

AugmentConfig AugmentConfig::FromJson(const nlohmann::json& j) {
  AugmentConfig c;
  if (!j.is_object()) throw InvalidArgument("augment config must be a JSON object");
  c.method = ParseAugmentMethod(j.value("method", ToString(c.method)));
  c.size_multiplier = j.value("size_multiplier", c.size_multiplier);
  c.min_per_class = j.value("min_per_class", c.min_per_class);
  c.restriction = ParseRestriction(j.value("restriction", ToString(c.restriction)));
  c.silhouette_min = j.value("silhouette_min", c.silhouette_min);
  c.postprocess = ParsePostprocessMode(j.value("postprocess", ToString(c.postprocess)));
  c.k_neighbors = j.value("k_neighbors", c.k_neighbors);
  c.batch_size_generated = j.value("batch_size_generated", c.batch_size_generated);
  c.seed = j.value("seed", c.seed);
  c.max_iterations = j.value("max_iterations", c.max_iterations);
  c.max_consecutive_discards = j.value("max_consecutive_discards", c.max_consecutive_discards);
  c.Validate();
  return c;
}

void GanConfig::Validate() const {
  auto positive = [](std::size_t v, const char* name) {
    if (v == 0) throw InvalidArgument(std::string(name) + " must be positive");
  };
  positive(noise_dim, "noise_dim");
  positive(epochs, "epochs");
  positive(batch_size, "batch_size");
  for (std::size_t w : generator_layers) positive(w, "generator layer width");
  for (std::size_t w : discriminator_layers) positive(w, "discriminator layer width");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    throw InvalidArgument("learning_rate must be positive");
  }
  if (!(temperature > 0.0) || !std::isfinite(temperature)) {
    throw InvalidArgument("temperature must be positive");
  }
}

nlohmann::json GanConfig::ToJson() const {
  return {{"noise_dim", noise_dim},
          {"generator_layers", generator_layers},
          {"discriminator_layers", discriminator_layers},
          {"epochs", epochs},
          {"learning_rate", learning_rate},
          {"batch_size", batch_size},
          {"temperature", temperature},
          {"seed", seed}};
}

GanConfig GanConfig::FromJson(const nlohmann::json& j) {
  GanConfig c;
  if (!j.is_object()) throw InvalidArgument("GAN config must be a JSON object");
  c.noise_dim = j.value("noise_dim", c.noise_dim);
  c.generator_layers = j.value("generator_layers", c.generator_layers);
  c.discriminator_layers = j.value("discriminator_layers", c.discriminator_layers);
  c.epochs = j.value("epochs", c.epochs);
  c.learning_rate = j.value("learning_rate", c.learning_rate);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.temperature = j.value("temperature", c.temperature);
  c.seed = j.value("seed", c.seed);
  c.Validate();
  return c;
}

nlohmann::json AugmentReport::ToJson() const {
  nlohmann::json phases_j = nlohmann::json::array();
  for (const PhaseReport& p : phases) {
    phases_j.push_back({{"name", p.name},
                        {"target_class", p.target_class},
                        {"generated", p.generated},
                        {"accepted", p.accepted},
                        {"discarded", p.discarded}});
  }
  nlohmann::json traj = nlohmann::json::array();
  for (const SilhouetteStep& s : trajectory) {
    traj.push_back({{"iteration", s.iteration},
                    {"phase", s.phase},
                    {"target_class", s.target_class},
                    {"batch_size", s.batch_size},
                    {"restricted", s.restricted},
                    {"previous", s.previous},
                    {"score", s.score},
                    {"accepted", s.accepted}});
  }
  nlohmann::json j = {{"method", method},
                      {"restriction", restriction},
                      {"input_size", input_size},
                      {"phases", phases_j},
                      {"final_positive", final_positive},
                      {"final_negative", final_negative},
                      {"iterations", iterations},
                      {"silhouette_min", silhouette_min},
                      {"trajectory", traj}};
  j["initial_silhouette"] = initial_silhouette ? nlohmann::json(*initial_silhouette) : nlohmann::json();
  return j;
}

AugmentReport AugmentReport::FromJson(const nlohmann::json& j) {
  AugmentReport r;
  r.method = j.at("method").get<std::string>();
  r.restriction = j.at("restriction").get<std::string>();
  r.input_size = j.at("input_size").get<std::size_t>();
  for (const auto& p : j.at("phases")) {
    r.phases.push_back({p.at("name").get<std::string>(), p.at("target_class").get<int>(),
                        p.at("generated").get<std::size_t>(), p.at("accepted").get<std::size_t>(),
                        p.at("discarded").get<std::size_t>()});
  }
  r.final_positive = j.at("final_positive").get<std::size_t>();
  r.final_negative = j.at("final_negative").get<std::size_t>();
  r.iterations = j.at("iterations").get<std::size_t>();
  r.silhouette_min = j.at("silhouette_min").get<double>();
  if (j.contains("initial_silhouette") && !j["initial_silhouette"].is_null()) {
    r.initial_silhouette = j["initial_silhouette"].get<double>();
  }
  for (const auto& s : j.at("trajectory")) {
    r.trajectory.push_back({s.at("iteration").get<std::size_t>(), s.at("phase").get<std::string>(),
                            s.at("target_class").get<int>(), s.value("batch_size", std::size_t{0}),
                            s.at("restricted").get<bool>(),
                            s.at("previous").get<double>(), s.at("score").get<double>(),
                            s.at("accepted").get<bool>()});
  }
  return r;
}

bool ReplayTrajectory(const AugmentReport& report) {
  if (report.trajectory.empty()) return true;
  if (!report.initial_silhouette) return false;
  double running = *report.initial_silhouette;
  for (const SilhouetteStep& s : report.trajectory) {
    if (s.previous != running) return false;
    const bool decision = s.restricted ? SilhouetteAccepts(s.previous, s.score, report.silhouette_min)
                                       : true;
    if (decision != s.accepted) return false;
    if (s.accepted) running = s.score;
  }
  return true;
}

std::vector<CaseRecord> PostprocessGenerated(std::vector<CaseRecord> records, PostprocessMode mode,
                                             const FeatureSchema& schema) {
  if (mode == PostprocessMode::kFloatAllowNegative) return records;
  for (CaseRecord& r : records) {
    if (r.x.size() != schema.width()) throw InvalidArgument("record width does not match the schema");
    for (std::size_t i = 0; i < schema.num_features(); ++i) {
      const FeatureSpec& f = schema.feature(i);
      if (f.kind != FeatureKind::kNumeric) continue;
      double& v = r.x[schema.offset(i)];
      v = std::max(v, 0.0);
      if (mode == PostprocessMode::kRoundInt && f.integer_valued) v = std::round(v);
    }
  }
  return records;
}

std::pair<Dataset, AugmentReport> GanThreePhaseAugment(const Dataset& dataset,
                                                       const AugmentConfig& config,
                                                       const GanConfig& gan_config) {
  config.Validate();
  return GanThreePhaseAugment(dataset, config, GanTrain(dataset, gan_config));
}

std::pair<Dataset, AugmentReport> GanThreePhaseAugment(const Dataset& dataset,
                                                       const AugmentConfig& config,
                                                       const GanModel& model) {
  config.Validate();
  std::size_t counts[2] = {dataset.CountLabel(0), dataset.CountLabel(1)};
  if (counts[0] == 0 || counts[1] == 0) {
    throw InvalidArgument("three-phase augmentation needs both classes present");
  }
  if (!model.schema || !(*model.schema == dataset.schema())) {
    throw InvalidArgument("GAN model schema does not match the dataset");
  }
  const int minority = counts[1] <= counts[0] ? 1 : 0;
  const int majority = 1 - minority;
  const std::size_t n_orig = dataset.size();
  const auto total_target = static_cast<std::size_t>(
      std::ceil(config.size_multiplier * static_cast<double>(n_orig)));

  AugmentReport report;
  report.method = ToString(AugmentMethod::kCtgan);
  report.restriction = ToString(config.restriction);
  report.input_size = n_orig;
  report.silhouette_min = config.silhouette_min;
  report.phases = {{"minority_to_parity", minority, 0, 0, 0},
                   {"negative_to_size", 0, 0, 0, 0},
                   {"minority_to_parity_final", minority, 0, 0, 0}};

  auto restricted = [&](int cls) {
    switch (config.restriction) {
      case Restriction::kNone: return false;
      case Restriction::kNegativeOnly: return cls == 0;
      case Restriction::kBoth: return true;
    }
    return false;
  };

  // Silhouette space: min-max scaling fitted on the data before augmentation.
  const bool gated = config.restriction != Restriction::kNone;
  const ScalerParams sil_scaler = FitMinMax(dataset);
  std::optional<SilhouetteTracker> tracker;
  if (gated) {
    tracker.emplace(ToRowMatrix(dataset, &sil_scaler), dataset.Labels());
    report.initial_silhouette = tracker->score();
  }

  Dataset current = dataset;
  Rng rng(config.seed);
  std::size_t consecutive_discards = 0;

  auto run_batch = [&](PhaseReport& phase, int cls, std::size_t need) {
    if (++report.iterations > config.max_iterations) {
      throw Error("three-phase augmentation did not finish within " +
                  std::to_string(config.max_iterations) + " batches");
    }
    const std::size_t b = std::min(config.batch_size_generated, need);
    std::vector<CaseRecord> batch = PostprocessGenerated(GanSample(model, cls, b, rng.NextU64()),
                                                         config.postprocess, dataset.schema());
    phase.generated += b;
    bool accept = true;
    if (gated) {
      RowMatrix pts(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(dataset.schema().width()));
      for (std::size_t i = 0; i < b; ++i) {
        const std::vector<double> z = sil_scaler.Transform(batch[i].x);
        for (std::size_t s = 0; s < z.size(); ++s) pts(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(s)) = z[s];
      }
      SilhouetteTracker::Candidate cand = tracker->Evaluate(std::move(pts), std::vector<int>(b, cls));
      SilhouetteStep step;
      step.iteration = report.iterations;
      step.phase = phase.name;
      step.target_class = cls;
      step.batch_size = b;
      step.restricted = restricted(cls);
      step.previous = tracker->score();
      step.score = cand.score;
      accept = !step.restricted || SilhouetteAccepts(step.previous, step.score, config.silhouette_min);
      step.accepted = accept;
      report.trajectory.push_back(step);
      if (accept) tracker->Commit(std::move(cand));
    }
    if (!accept) {
      phase.discarded += b;
      if (++consecutive_discards > config.max_consecutive_discards) {
        throw Error("silhouette gate rejected " + std::to_string(consecutive_discards - 1) +
                    " consecutive batches in phase " + phase.name);
      }
      return;
    }
    consecutive_discards = 0;
    phase.accepted += b;
    for (CaseRecord& r : batch) current.Add(std::move(r), Provenance::kSynthetic);
    counts[cls] += b;
  };

  // i. minority class up to the majority count.
  while (counts[minority] < counts[majority]) {
    run_batch(report.phases[0], minority, counts[majority] - counts[minority]);
  }
  // ii. negatives until the size target is met.
  while (counts[0] + counts[1] < total_target) {
    run_batch(report.phases[1], 0, total_target - counts[0] - counts[1]);
  }
  // iii. positives (the class left behind) back to parity.
  report.phases[2].target_class = counts[1] < counts[0] ? 1 : 0;
  while (counts[0] != counts[1]) {
    const int cls = counts[1] < counts[0] ? 1 : 0;
    run_batch(report.phases[2], cls, counts[1 - cls] - counts[cls]);
  }

  report.final_positive = counts[1];
  report.final_negative = counts[0];
  return {std::move(current), std::move(report)};
}

}  // namespace tabrisk
