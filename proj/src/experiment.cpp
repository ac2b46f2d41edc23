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

#include "tabrisk/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>

#include "tabrisk/ensemble.hpp"
#include "tabrisk/errors.hpp"
#include "tabrisk/kernels.hpp"

namespace tabrisk {

namespace {

std::uint64_t DeriveSeed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

enum SeedStream : std::uint64_t { kSplit = 0, kAugment = 1, kGan = 2, kTrain = 3 };

void WriteJson(const std::filesystem::path& path, const nlohmann::json& j) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

std::string CePoolName(CePool p) { return p == CePool::kRealTrain ? "real_train" : "augmented_train"; }

CePool ParseCePool(const std::string& s) {
  if (s == "real_train") return CePool::kRealTrain;
  if (s == "augmented_train") return CePool::kAugmentedTrain;
  throw InvalidArgument("unknown counterfactual pool '" + s + "'");
}

nlohmann::json Summary(const std::vector<double>& v) {
  double mean = 0.0, ss = 0.0;
  for (double x : v) mean += x;
  if (!v.empty()) mean /= static_cast<double>(v.size());
  for (double x : v) ss += (x - mean) * (x - mean);
  const double sd = v.empty() ? 0.0 : std::sqrt(ss / static_cast<double>(v.size()));
  return {{"mean", mean}, {"std", sd}, {"values", v}};
}

constexpr const char* kTableColumns[] = {"loss",   "accuracy", "sensitivity", "specificity",
                                         "f1_pos", "f1_neg",   "avg_f1",      "auroc"};

std::vector<int> PredictClasses(const std::vector<double>& p, double threshold) {
  std::vector<int> c;
  c.reserve(p.size());
  for (double v : p) c.push_back(Classify(v, threshold));
  return c;
}

RepetitionResult RunRepetition(const ExperimentConfig& config, const Dataset& data, std::size_t r,
                               const std::filesystem::path& rep_dir,
                               const std::function<void(const std::string&)>& log) {
  RepetitionResult res;
  res.index = r;
  res.seed = config.base_seed + r;
  auto note = [&](const std::string& msg) {
    if (log) log("rep " + std::to_string(r) + ": " + msg);
  };
  const FeatureSchema& schema = data.schema();

  BalancedSplit split = SplitBalancedTest(data, config.test_per_class, DeriveSeed(res.seed, kSplit));
  note("split " + std::to_string(split.train.size()) + " train / " + std::to_string(split.test.size()) + " test");

  // Augmentation only ever sees split.train.
  Dataset train = split.train;
  if (config.pipeline != Pipeline::kNoAugment) {
    AugmentConfig aug = config.EffectiveAugment();
    aug.seed = DeriveSeed(res.seed, kAugment);
    std::pair<Dataset, AugmentReport> out = [&] {
      if (aug.method == AugmentMethod::kAdasyn) return AdasynBalanceLoop(split.train, aug);
      GanConfig gan = config.gan;
      gan.seed = DeriveSeed(res.seed, kGan);
      return GanThreePhaseAugment(split.train, aug, gan);
    }();
    train = std::move(out.first);
    res.augment = std::move(out.second);
    note("augmented to " + std::to_string(train.size()) + " records");
  }
  res.train_positive = train.CountLabel(1);
  res.train_negative = train.CountLabel(0);
  res.class_imbalance = 2 * std::min(res.train_positive, res.train_negative) <
                        std::max(res.train_positive, res.train_negative);
  res.purity = AuditTestPurity(split, split.train, train);
  if (!res.purity.passed()) throw Error("test-set purity audit failed");

  const ScalerParams scaler = FitMinMax(train);
  const LabeledMatrix lm = MakeLabeledMatrix(train, scaler);
  TrainConfig tc = config.train;
  tc.seed = DeriveSeed(res.seed, kTrain);
  std::vector<FoldResult> folds = KFoldTrain(lm, config.backbone, tc);

  std::vector<int> val_labels;
  std::vector<double> val_probs, fold_losses;
  for (const FoldResult& f : folds) {
    for (std::size_t i = 0; i < f.val_rows.size(); ++i) {
      val_labels.push_back(lm.y[f.val_rows[i]]);
      val_probs.push_back(f.val_probs[i]);
    }
    fold_losses.push_back(f.val_loss);
    res.fold_val_f1.push_back(f.val_macro_f1);
  }
  res.best_val_loss = *std::min_element(fold_losses.begin(), fold_losses.end());
  res.val = ClassificationReport(val_labels, val_probs, config.threshold);

  const EnsembleModel model =
      BuildEnsemble(std::move(folds), scaler, data.schema_ptr(), config.gate, config.threshold);
  res.alphas = model.alphas;
  res.voting_fallback = model.fallback;
  note("trained " + std::to_string(model.members.size()) + " fold models");

  const std::vector<double> train_probs = kernels::omp::PredictProba(model, ToRowMatrix(train, nullptr));
  res.train = ClassificationReport(train.Labels(), train_probs, config.threshold);
  const std::vector<int> test_labels = split.test.Labels();
  const std::vector<double> test_probs = kernels::omp::PredictProba(model, ToRowMatrix(split.test, nullptr));
  res.test = ClassificationReport(test_labels, test_probs, config.threshold);
  res.gap = DistributionGap(fold_losses, Bce(test_labels, test_probs));

  // Counterfactuals for the abnormal-classified test cases.
  const std::vector<int> test_cls = PredictClasses(test_probs, config.threshold);
  std::vector<CaseRecord> cases;
  for (std::size_t i = 0; i < test_cls.size(); ++i) {
    if (test_cls[i] == 1) cases.push_back(split.test.record(i));
  }
  res.ce_candidates = cases.size();
  std::vector<Counterfactual> cf_full, cf_small;
  if (!cases.empty()) {
    const CounterfactualSearch search(model, config.ce_pool == CePool::kRealTrain ? split.train : train);
    for (const CaseRecord& c : cases) {
      cf_full.push_back(search.Generate(c, schema.num_features()));
      cf_small.push_back(search.Generate(c, config.ce_small_budget));
    }
    for (const Counterfactual& c : cf_full) {
      if (c.flipped && model.Predict(c.counterfactual.x) == model.Predict(c.original.x)) {
        res.ce_round_trip = false;
      }
    }
    res.ce_full = SummarizeCounterfactuals(cf_full, schema.num_features());
    res.ce_small = SummarizeCounterfactuals(cf_small, config.ce_small_budget);
  }
  res.ok = true;
  note("test avg F1 " + std::to_string(res.test.macro_f1));

  if (!rep_dir.empty()) {
    SaveDataset(split.test, rep_dir / "test.csv", true);
    SaveDataset(train, rep_dir / "train.csv", true);
    if (res.augment) WriteJson(rep_dir / "augment_report.json", res.augment->ToJson());
    model.Save(rep_dir / "ensemble.json");
    WriteJson(rep_dir / "metrics.json",
              {{"train", res.train.ToJson()}, {"val", res.val.ToJson()}, {"test", res.test.ToJson()}});
    {
      std::ofstream roc(rep_dir / "roc.csv");
      ComputeRoc(test_labels, test_probs).WriteCsv(roc);
    }
    nlohmann::json gap = res.gap.ToJson();
    gap["best_val_loss"] = res.best_val_loss;
    WriteJson(rep_dir / "gap.json", gap);
    nlohmann::json cfj = nlohmann::json::array();
    for (const Counterfactual& c : cf_full) cfj.push_back(c.ToJson(schema));
    nlohmann::json cfs = nlohmann::json::array();
    for (const Counterfactual& c : cf_small) cfs.push_back(c.ToJson(schema));
    WriteJson(rep_dir / "counterfactuals.json",
              {{"max_changes_full", cfj}, {"max_changes_small", cfs}});
    WriteJson(rep_dir / "purity.json", res.purity.ToJson());
    WriteJson(rep_dir / "summary.json", res.ToJson());
  }
  return res;
}

}  // namespace

std::string ToString(Pipeline p) {
  switch (p) {
    case Pipeline::kAimenCtgan: return "aimen_ctgan";
    case Pipeline::kRAimenNegative: return "r_aimen_negative";
    case Pipeline::kRAimenBoth: return "r_aimen_both";
    case Pipeline::kAimenAdasyn: return "aimen_adasyn";
    case Pipeline::kNoAugment: return "no_augment";
  }
  return "no_augment";
}

Pipeline ParsePipeline(const std::string& s) {
  for (Pipeline p : {Pipeline::kAimenCtgan, Pipeline::kRAimenNegative, Pipeline::kRAimenBoth,
                     Pipeline::kAimenAdasyn, Pipeline::kNoAugment}) {
    if (ToString(p) == s) return p;
  }
  throw InvalidArgument("unknown pipeline '" + s + "'");
}

AugmentConfig ExperimentConfig::EffectiveAugment() const {
  AugmentConfig a = augment;
  switch (pipeline) {
    case Pipeline::kAimenCtgan:
      a.method = AugmentMethod::kCtgan;
      a.restriction = Restriction::kNone;
      break;
    case Pipeline::kRAimenNegative:
      a.method = AugmentMethod::kCtgan;
      a.restriction = Restriction::kNegativeOnly;
      break;
    case Pipeline::kRAimenBoth:
      a.method = AugmentMethod::kCtgan;
      a.restriction = Restriction::kBoth;
      break;
    case Pipeline::kAimenAdasyn:
      a.method = AugmentMethod::kAdasyn;
      a.restriction = Restriction::kNone;
      break;
    case Pipeline::kNoAugment:
      break;
  }
  return a;
}

void ExperimentConfig::Validate() const {
  if (n_repetitions < 1) throw InvalidArgument("n_repetitions must be >= 1");
  if (test_per_class < 1) throw InvalidArgument("test_per_class must be >= 1");
  if (!(threshold >= 0.0 && threshold <= 1.0)) throw InvalidArgument("threshold must lie in [0, 1]");
  if (!(gate >= 0.0 && gate <= 1.0)) throw InvalidArgument("gate must lie in [0, 1]");
  if (backbone == Backbone::kCustom) throw InvalidArgument("experiments need a backbone v1..v5");
  augment.Validate();
  gan.Validate();
  train.Validate();
}

nlohmann::json ExperimentConfig::ToJson() const {
  return {{"pipeline", ToString(pipeline)},
          {"backbone", ToString(backbone)},
          {"augment", augment.ToJson()},
          {"gan", gan.ToJson()},
          {"train", train.ToJson()},
          {"n_repetitions", n_repetitions},
          {"base_seed", base_seed},
          {"test_per_class", test_per_class},
          {"gate", gate},
          {"threshold", threshold},
          {"ce_pool", CePoolName(ce_pool)},
          {"ce_small_budget", ce_small_budget}};
}

ExperimentConfig ExperimentConfig::FromJson(const nlohmann::json& j) {
  if (!j.is_object()) throw InvalidArgument("experiment config must be a JSON object");
  ExperimentConfig c;
  try {
    c.pipeline = ParsePipeline(j.value("pipeline", ToString(c.pipeline)));
    c.backbone = ParseBackbone(j.value("backbone", ToString(c.backbone)));
    if (j.contains("augment")) c.augment = AugmentConfig::FromJson(j["augment"]);
    if (j.contains("gan")) c.gan = GanConfig::FromJson(j["gan"]);
    if (j.contains("train")) c.train = TrainConfig::FromJson(j["train"]);
    c.n_repetitions = j.value("n_repetitions", c.n_repetitions);
    c.base_seed = j.value("base_seed", c.base_seed);
    c.test_per_class = j.value("test_per_class", c.test_per_class);
    c.gate = j.value("gate", c.gate);
    c.threshold = j.value("threshold", c.threshold);
    c.ce_pool = ParseCePool(j.value("ce_pool", CePoolName(c.ce_pool)));
    c.ce_small_budget = j.value("ce_small_budget", c.ce_small_budget);
  } catch (const nlohmann::json::exception& ex) {
    throw InvalidArgument(std::string("malformed experiment config: ") + ex.what());
  }
  c.Validate();
  return c;
}

ExperimentConfig ExperimentConfig::Load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open config file " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& ex) {
    throw InvalidArgument("config file " + path.string() + " is not valid JSON: " + ex.what());
  }
  return FromJson(j);
}

nlohmann::json PurityAudit::ToJson() const {
  return {{"test_records", test_records},
          {"augmentation_inputs_checked", augmentation_inputs_checked},
          {"training_records_checked", training_records_checked},
          {"source_duplicates", source_duplicates},
          {"violations", violations},
          {"disjoint_rows", disjoint_rows},
          {"passed", passed()}};
}

PurityAudit AuditTestPurity(const BalancedSplit& split, const Dataset& augmentation_input,
                            const Dataset& training_set) {
  PurityAudit a;
  a.test_records = split.test.size();
  std::set<std::size_t> test_rows(split.test_rows.begin(), split.test_rows.end());
  a.disjoint_rows = test_rows.size() == split.test_rows.size() &&
                    std::none_of(split.train_rows.begin(), split.train_rows.end(),
                                 [&](std::size_t r) { return test_rows.count(r) > 0; });
  std::set<std::vector<double>> test_vectors;
  for (const CaseRecord& c : split.test.records()) test_vectors.insert(c.x);
  // Real training rows whose vector also occurs in the test set: duplicates in
  // the source data, not leaks.
  std::multiset<std::vector<double>> real_dupes;
  for (const CaseRecord& c : split.train.records()) {
    if (test_vectors.count(c.x)) real_dupes.insert(c.x);
  }
  auto check = [&](const Dataset& d, std::size_t& checked) {
    std::multiset<std::vector<double>> allowance = real_dupes;
    for (std::size_t i = 0; i < d.size(); ++i) {
      ++checked;
      const std::vector<double>& x = d.record(i).x;
      if (!test_vectors.count(x)) continue;
      auto it = allowance.find(x);
      if (d.provenance(i) == Provenance::kReal && it != allowance.end()) {
        allowance.erase(it);
        ++a.source_duplicates;
      } else {
        ++a.violations;
      }
    }
  };
  check(augmentation_input, a.augmentation_inputs_checked);
  check(training_set, a.training_records_checked);
  return a;
}

nlohmann::json RepetitionResult::ToJson() const {
  nlohmann::json j = {{"index", index}, {"seed", seed}, {"ok", ok}};
  if (!ok) {
    j["error"] = error;
    return j;
  }
  j["train"] = train.ToJson();
  j["val"] = val.ToJson();
  j["test"] = test.ToJson();
  nlohmann::json gap_j = gap.ToJson();
  gap_j["best_val_loss"] = best_val_loss;
  j["gap"] = gap_j;
  j["fold_val_f1"] = fold_val_f1;
  j["alphas"] = alphas;
  j["voting_fallback"] = voting_fallback;
  j["augment"] = augment ? augment->ToJson() : nlohmann::json();
  j["ce_candidates"] = ce_candidates;
  j["ce_full"] = ce_full ? ce_full->ToJson() : nlohmann::json();
  j["ce_small"] = ce_small ? ce_small->ToJson() : nlohmann::json();
  j["ce_round_trip"] = ce_round_trip;
  j["purity"] = purity.ToJson();
  j["train_positive"] = train_positive;
  j["train_negative"] = train_negative;
  j["class_imbalance"] = class_imbalance;
  return j;
}

std::size_t ExperimentResult::completed() const {
  return static_cast<std::size_t>(std::count_if(repetitions.begin(), repetitions.end(),
                                                [](const RepetitionResult& r) { return r.ok; }));
}

nlohmann::json ExperimentResult::Aggregate() const {
  nlohmann::json agg = {{"pipeline", ToString(config.pipeline)},
                        {"backbone", ToString(config.backbone)},
                        {"n_repetitions", config.n_repetitions},
                        {"completed", completed()}};
  nlohmann::json failed = nlohmann::json::array();
  std::vector<const RepetitionResult*> ok;
  for (const RepetitionResult& r : repetitions) {
    if (r.ok) {
      ok.push_back(&r);
    } else {
      failed.push_back({{"index", r.index}, {"seed", r.seed}, {"error", r.error}});
    }
  }
  agg["failed"] = failed;

  for (const char* split : {"train", "val", "test"}) {
    nlohmann::json cols;
    for (const char* col : kTableColumns) {
      std::vector<double> v;
      for (const RepetitionResult* r : ok) {
        const MetricsReport& m = std::string(split) == "train" ? r->train
                                 : std::string(split) == "val" ? r->val
                                                               : r->test;
        v.push_back(m.ToJson().at(col).get<double>());
      }
      cols[col] = Summary(v);
    }
    agg[split] = cols;
  }

  std::vector<double> best, lval, ltest, gap;
  std::vector<double> ce_acc, ce_dist, ce_sparse, ce5_acc, ce5_dist, ce5_sparse;
  bool purity = true, imbalance = false, round_trip = true;
  for (const RepetitionResult* r : ok) {
    best.push_back(r->best_val_loss);
    lval.push_back(r->gap.mean_val_loss);
    ltest.push_back(r->gap.test_loss);
    gap.push_back(r->gap.gap_percent);
    if (r->ce_full) {
      ce_acc.push_back(r->ce_full->accuracy);
      ce_dist.push_back(r->ce_full->distance_mean);
      ce_sparse.push_back(r->ce_full->sparsity_mean);
    }
    if (r->ce_small) {
      ce5_acc.push_back(r->ce_small->accuracy);
      ce5_dist.push_back(r->ce_small->distance_mean);
      ce5_sparse.push_back(r->ce_small->sparsity_mean);
    }
    purity = purity && r->purity.passed();
    imbalance = imbalance || r->class_imbalance;
    round_trip = round_trip && r->ce_round_trip;
  }
  agg["gap"] = {{"best_val_loss", Summary(best)},
                {"l_val", Summary(lval)},
                {"l_test", Summary(ltest)},
                {"gap_percent", Summary(gap)}};
  agg["counterfactuals"] = {
      {"max_changes_full", {{"accuracy", Summary(ce_acc)}, {"distance", Summary(ce_dist)}, {"sparsity", Summary(ce_sparse)}}},
      {"max_changes_small",
       {{"max_changes", config.ce_small_budget},
        {"accuracy", Summary(ce5_acc)},
        {"distance", Summary(ce5_dist)},
        {"sparsity", Summary(ce5_sparse)}}},
      {"round_trip", round_trip}};
  agg["purity_passed"] = purity;
  agg["class_imbalance"] = imbalance;
  if (imbalance) {
    agg["warnings"] = {"training data is class-imbalanced (minority below half the majority)"};
  }
  return agg;
}

ExperimentResult RunExperiment(const ExperimentConfig& config, const Dataset& data,
                               const std::filesystem::path& out_dir,
                               const std::function<void(const std::string&)>& log) {
  config.Validate();
  if (data.CountLabel(0) == 0 || data.CountLabel(1) == 0) {
    throw InvalidArgument("experiment data needs both classes present");
  }
  if (!out_dir.empty()) {
    std::filesystem::create_directories(out_dir);
    WriteJson(out_dir / "config.json", config.ToJson());
  }
  ExperimentResult result;
  result.config = config;
  for (std::size_t r = 0; r < config.n_repetitions; ++r) {
    std::filesystem::path rep_dir;
    if (!out_dir.empty()) {
      rep_dir = out_dir / ("rep_" + std::to_string(r));
      std::filesystem::create_directories(rep_dir);
    }
    try {
      result.repetitions.push_back(RunRepetition(config, data, r, rep_dir, log));
    } catch (const std::exception& ex) {
      RepetitionResult failed;
      failed.index = r;
      failed.seed = config.base_seed + r;
      failed.error = ex.what();
      if (log) log("rep " + std::to_string(r) + " failed: " + failed.error);
      if (!rep_dir.empty()) WriteJson(rep_dir / "summary.json", failed.ToJson());
      result.repetitions.push_back(std::move(failed));
    }
  }
  if (!out_dir.empty()) WriteJson(out_dir / "aggregate.json", result.Aggregate());
  if (result.completed() == 0) {
    throw Error("every repetition failed; first error: " + result.repetitions.front().error);
  }
  return result;
}

nlohmann::json GapReportFromRunDir(const std::filesystem::path& run_dir) {
  if (!std::filesystem::is_directory(run_dir)) throw InvalidArgument("not a run directory: " + run_dir.string());
  std::map<std::size_t, nlohmann::json> reps;
  for (const auto& entry : std::filesystem::directory_iterator(run_dir)) {
    const std::string name = entry.path().filename().string();
    if (!entry.is_directory() || name.rfind("rep_", 0) != 0) continue;
    const auto gap_path = entry.path() / "gap.json";
    if (!std::filesystem::exists(gap_path)) continue;
    std::ifstream in(gap_path);
    nlohmann::json j;
    in >> j;
    reps[std::stoul(name.substr(4))] = j;
  }
  if (reps.empty()) throw InvalidArgument("no repetition gap reports under " + run_dir.string());
  nlohmann::json per = nlohmann::json::array();
  std::vector<double> best, lval, ltest, gap;
  for (auto& [idx, j] : reps) {
    j["repetition"] = idx;
    best.push_back(j.at("best_val_loss").get<double>());
    lval.push_back(j.at("mean_val_loss").get<double>());
    ltest.push_back(j.at("test_loss").get<double>());
    gap.push_back(j.at("gap_percent").get<double>());
    per.push_back(j);
  }
  return {{"repetitions", per},
          {"best_val_loss", Summary(best)},
          {"l_val", Summary(lval)},
          {"l_test", Summary(ltest)},
          {"gap_percent", Summary(gap)}};
}

}  // namespace tabrisk
