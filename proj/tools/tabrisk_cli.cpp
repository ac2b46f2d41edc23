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

// tabrisk command-line driver.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "tabrisk/augment.hpp"
#include "tabrisk/benchmark_data.hpp"
#include "tabrisk/ensemble.hpp"
#include "tabrisk/errors.hpp"
#include "tabrisk/experiment.hpp"
#include "tabrisk/explain.hpp"
#include "tabrisk/kernels.hpp"
#include "tabrisk/metrics.hpp"
#include "tabrisk/nn.hpp"
#include "tabrisk/service.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace tabrisk;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitRuntime = 2;

json ReadJson(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& ex) {
    throw InvalidArgument(path.string() + " is not valid JSON: " + ex.what());
  }
}

void WriteJson(const fs::path& path, const json& j) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

// Output path, or stdout when empty.
void Emit(const std::string& out, const json& j) {
  if (out.empty()) {
    std::cout << j.dump(2) << '\n';
  } else {
    WriteJson(out, j);
  }
}

SchemaPtr LoadSchema(const std::string& path) {
  if (path.empty()) return std::make_shared<const FeatureSchema>(DefaultBenchmarkSchema());
  return std::make_shared<const FeatureSchema>(FeatureSchema::Load(path));
}

// A config file may hold the section directly or nest it under key.
json Section(const json& doc, const char* key) {
  if (doc.is_object() && doc.contains(key)) return doc.at(key);
  return doc;
}

void PrintSeed(std::uint64_t seed) { std::cout << "seed: " << seed << '\n'; }

struct Options {
  std::string schema, schema_out, config, out, pipeline, backbone, data, model, pool, cases, run, report, roc,
      host;
  std::optional<std::uint64_t> seed;
  std::optional<double> threshold;
  std::optional<int> port;
  std::size_t n_records = 1457, n_positive = 112;
  std::optional<std::size_t> max_changes;
  std::size_t n_samples = 500;
  bool attribution = false;
  bool with_provenance = true;
};

int GenBench(const Options& o) {
  BenchmarkConfig cfg;
  cfg.n_total = o.n_records;
  cfg.n_positive = o.n_positive;
  cfg.seed = o.seed.value_or(cfg.seed);
  PrintSeed(cfg.seed);
  const SchemaPtr schema = LoadSchema(o.schema);
  const Dataset d = GenerateBenchmarkDataset(cfg, schema);
  if (!o.schema_out.empty()) WriteJson(o.schema_out, schema->ToJson());
  if (o.out.empty()) {
    WriteDatasetCsv(d, std::cout);
  } else {
    SaveDataset(d, o.out);
    std::cerr << "wrote " << d.size() << " records (" << d.CountLabel(1) << " positive) to " << o.out << '\n';
  }
  return 0;
}

int Augment(const Options& o) {
  const SchemaPtr schema = LoadSchema(o.schema);
  const Dataset data = LoadDataset(o.data, schema);
  AugmentConfig aug;
  GanConfig gan;
  if (!o.config.empty()) {
    const json doc = ReadJson(o.config);
    aug = AugmentConfig::FromJson(Section(doc, "augment"));
    if (doc.contains("gan")) gan = GanConfig::FromJson(doc.at("gan"));
  }
  if (!o.pipeline.empty()) {
    ExperimentConfig ec;
    ec.pipeline = ParsePipeline(o.pipeline);
    if (ec.pipeline == Pipeline::kNoAugment) throw InvalidArgument("pipeline no_augment has no augmentation step");
    ec.augment = aug;
    aug = ec.EffectiveAugment();
  }
  if (o.seed) {
    aug.seed = *o.seed;
    gan.seed = *o.seed;
  }
  PrintSeed(aug.seed);
  auto [out, report] = aug.method == AugmentMethod::kAdasyn ? AdasynBalanceLoop(data, aug)
                                                            : GanThreePhaseAugment(data, aug, gan);
  SaveDataset(out, o.out, o.with_provenance);
  const std::string report_path = o.report.empty() ? o.out + ".report.json" : o.report;
  WriteJson(report_path, report.ToJson());
  std::cerr << "augmented " << data.size() << " -> " << out.size() << " records (" << report.final_positive
            << " positive / " << report.final_negative << " negative); report " << report_path << '\n';
  return 0;
}

int Train(const Options& o) {
  const SchemaPtr schema = LoadSchema(o.schema);
  const Dataset data = LoadDataset(o.data, schema);
  TrainConfig tc;
  double gate = 0.7;
  double threshold = 0.5;
  if (!o.config.empty()) {
    const json doc = ReadJson(o.config);
    tc = TrainConfig::FromJson(Section(doc, "train"));
    gate = doc.value("gate", gate);
    threshold = doc.value("threshold", threshold);
  }
  if (o.seed) tc.seed = *o.seed;
  if (o.threshold) threshold = *o.threshold;
  const Backbone backbone = ParseBackbone(o.backbone.empty() ? "v5" : o.backbone);
  PrintSeed(tc.seed);
  const ScalerParams scaler = FitMinMax(data);
  std::vector<FoldResult> folds = KFoldTrain(MakeLabeledMatrix(data, scaler), backbone, tc);
  std::vector<double> losses;
  for (const FoldResult& f : folds) {
    std::cerr << "fold " << f.fold_index << ": val avg F1 " << f.val_macro_f1 << ", val loss " << f.val_loss
              << ", epochs " << f.epochs_run << '\n';
    losses.push_back(f.val_loss);
  }
  EnsembleModel model = BuildEnsemble(std::move(folds), scaler, schema, gate, threshold);
  model.training_info["val_loss"] = losses;
  model.training_info["train_config"] = tc.ToJson();
  model.training_info["backbone"] = ToString(backbone);
  if (model.fallback) std::cerr << "warning: no fold model cleared the gate; using uniform weights\n";
  model.Save(o.out);
  std::cerr << "wrote ensemble to " << o.out << '\n';
  return 0;
}

int Eval(const Options& o) {
  EnsembleModel model = EnsembleModel::Load(o.model);
  if (o.threshold) model.threshold = *o.threshold;
  const Dataset test = LoadDataset(o.data, model.schema);
  const std::vector<int> labels = test.Labels();
  const std::vector<double> probs = kernels::omp::PredictProba(model, ToRowMatrix(test, nullptr));
  json report = ClassificationReport(labels, probs, model.threshold).ToJson();
  report["threshold"] = model.threshold;
  report["n_cases"] = test.size();
  Emit(o.out, report);
  const bool both = test.CountLabel(0) > 0 && test.CountLabel(1) > 0;
  const std::string roc_path = !o.roc.empty() ? o.roc
                               : o.out.empty() ? std::string()
                                               : (fs::path(o.out).replace_extension("").string() + ".roc.csv");
  if (!roc_path.empty() && both) {
    std::ofstream roc(roc_path);
    if (!roc) throw Error("cannot write " + roc_path);
    ComputeRoc(labels, probs).WriteCsv(roc);
  }
  return 0;
}

int Explain(const Options& o) {
  EnsembleModel model = EnsembleModel::Load(o.model);
  if (o.threshold) model.threshold = *o.threshold;
  const Dataset cases = LoadDataset(o.cases, model.schema);
  const Dataset pool = LoadDataset(o.pool, model.schema);
  const std::size_t max_changes = o.max_changes.value_or(model.schema->num_features());
  const std::uint64_t seed = o.seed.value_or(0);
  if (o.attribution) PrintSeed(seed);

  const CounterfactualSearch search(model, pool);
  std::vector<Counterfactual> found;
  json cfs = json::array();
  json attributions = json::array();
  for (std::size_t i = 0; i < cases.size(); ++i) {
    const CaseRecord& c = cases.record(i);
    if (o.attribution) {
      json a = ShapleyAttribution(model, c.x, pool, o.n_samples, seed).ToJson();
      a["case"] = i;
      attributions.push_back(a);
    }
    if (model.Predict(c.x) != 1) continue;
    found.push_back(search.Generate(c, max_changes));
    json cf = found.back().ToJson(*model.schema);
    cf["case"] = i;
    cfs.push_back(cf);
  }
  json out = {{"threshold", model.threshold}, {"max_changes", max_changes}, {"counterfactuals", cfs}};
  if (found.empty()) {
    std::cerr << "counterfactuals target abnormal-classified cases; none of the " << cases.size()
              << " cases is classified abnormal at threshold " << model.threshold << '\n';
  } else {
    out["summary"] = SummarizeCounterfactuals(found, max_changes).ToJson();
  }
  if (o.attribution) {
    out["attributions"] = attributions;
    out["seed"] = seed;
  }
  Emit(o.out, out);
  return 0;
}

int Gap(const Options& o) {
  Emit(o.out, GapReportFromRunDir(o.run));
  return 0;
}

int Experiment(const Options& o) {
  ExperimentConfig cfg = o.config.empty() ? ExperimentConfig{} : ExperimentConfig::Load(o.config);
  if (!o.pipeline.empty()) cfg.pipeline = ParsePipeline(o.pipeline);
  if (!o.backbone.empty()) cfg.backbone = ParseBackbone(o.backbone);
  if (o.seed) cfg.base_seed = *o.seed;
  if (o.threshold) cfg.threshold = *o.threshold;
  cfg.Validate();
  PrintSeed(cfg.base_seed);
  const SchemaPtr schema = LoadSchema(o.schema);
  const Dataset data = o.data.empty() ? GenerateBenchmarkDataset(BenchmarkConfig{}, schema)
                                      : LoadDataset(o.data, schema);
  const ExperimentResult result =
      RunExperiment(cfg, data, o.out, [](const std::string& line) { std::cerr << line << '\n'; });
  const json agg = result.Aggregate();
  std::cerr << "completed " << result.completed() << "/" << cfg.n_repetitions << " repetitions; test avg F1 "
            << agg["test"]["avg_f1"]["mean"].get<double>() << '\n';
  if (!agg["purity_passed"].get<bool>()) {
    std::cerr << "test-set purity audit failed\n";
    return kExitRuntime;
  }
  return 0;
}

int Serve(const Options& o) {
  EnsembleModel model = EnsembleModel::Load(o.model);
  if (o.threshold) model.threshold = *o.threshold;
  const Dataset pool = LoadDataset(o.pool, model.schema);
  ServiceOptions so;
  so.host = o.host;
  so.port = o.port.value_or(PortFromEnvironment(8080));
  if (o.seed) so.default_seed = *o.seed;
  Service service(std::move(model), pool, so);
  const int port = service.Bind();
  std::cout << "listening on http://" << so.host << ':' << port << std::endl;
  return service.Run() ? 0 : kExitRuntime;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"tabrisk: augmentation, ensemble training and explanations for tabular risk models"};
  app.require_subcommand(1);
  Options o;
  o.host = "127.0.0.1";

  auto seed_opt = [&](CLI::App* sc, const char* what) { sc->add_option("--seed", o.seed, what); };

  auto* gen = app.add_subcommand("gen-bench", "Write the synthetic benchmark dataset as CSV");
  gen->add_option("--schema", o.schema, "Schema JSON (default: built-in benchmark schema)");
  gen->add_option("--out", o.out, "Output CSV (default: stdout)");
  gen->add_option("--schema-out", o.schema_out, "Also write the schema as JSON");
  gen->add_option("--n-records", o.n_records, "Number of records")->capture_default_str();
  gen->add_option("--n-positive", o.n_positive, "Number of positive records")->capture_default_str();
  seed_opt(gen, "Generator seed (default 7)");

  auto* aug = app.add_subcommand("augment", "Augment a training CSV (ADASYN loop or GAN phases)");
  aug->add_option("--data", o.data, "Training CSV")->required();
  aug->add_option("--schema", o.schema, "Schema JSON");
  aug->add_option("--config", o.config, "Augment config JSON (optionally with a \"gan\" section)");
  aug->add_option("--pipeline", o.pipeline, "Pipeline name selecting method and restriction");
  aug->add_option("--out", o.out, "Augmented CSV")->required();
  aug->add_option("--report", o.report, "Report JSON (default: <out>.report.json)");
  seed_opt(aug, "Augmentation seed (default from config, else 0)");

  auto* train = app.add_subcommand("train", "Train the k-fold ensemble and write it as JSON");
  train->add_option("--data", o.data, "Training CSV")->required();
  train->add_option("--schema", o.schema, "Schema JSON");
  train->add_option("--config", o.config, "Train config JSON");
  train->add_option("--backbone", o.backbone, "Backbone v1..v5 (default v5)");
  train->add_option("--threshold", o.threshold, "Decision threshold stored with the model");
  train->add_option("--out", o.out, "Ensemble JSON")->required();
  seed_opt(train, "Training seed (default from config, else 0)");

  auto* eval = app.add_subcommand("eval", "Evaluate an ensemble on a labeled CSV");
  eval->add_option("--model", o.model, "Ensemble JSON")->required();
  eval->add_option("--data", o.data, "Labeled test CSV")->required();
  eval->add_option("--threshold", o.threshold, "Decision threshold (default: model's)");
  eval->add_option("--out", o.out, "Metrics JSON (default: stdout)");
  eval->add_option("--roc", o.roc, "ROC CSV (default: --out with extension .roc.csv)");

  auto* explain = app.add_subcommand("explain", "Counterfactuals (and attributions) for cases");
  explain->add_option("--model", o.model, "Ensemble JSON")->required();
  explain->add_option("--cases", o.cases, "Cases CSV (outcome column optional)")->required();
  explain->add_option("--pool", o.pool, "Neighbor pool CSV, usually the real training records")->required();
  explain->add_option("--threshold", o.threshold, "Decision threshold (default: model's)");
  explain->add_option("--max-changes", o.max_changes, "Feature budget (default: all features)");
  explain->add_flag("--attribution", o.attribution, "Also compute Shapley attributions");
  explain->add_option("--n-samples", o.n_samples, "Attribution permutations")->capture_default_str();
  explain->add_option("--out", o.out, "Output JSON (default: stdout)");
  seed_opt(explain, "Attribution seed (default 0)");

  auto* gap = app.add_subcommand("gap", "Distribution-gap report from a run directory");
  gap->add_option("--run", o.run, "Experiment run directory")->required();
  gap->add_option("--out", o.out, "Output JSON (default: stdout)");

  auto* exp = app.add_subcommand("experiment", "Run a full experiment from a config");
  exp->add_option("--config", o.config, "Experiment config JSON");
  exp->add_option("--data", o.data, "Dataset CSV (default: generated benchmark)");
  exp->add_option("--schema", o.schema, "Schema JSON");
  exp->add_option("--pipeline", o.pipeline, "Override the pipeline");
  exp->add_option("--backbone", o.backbone, "Override the backbone");
  exp->add_option("--threshold", o.threshold, "Override the decision threshold");
  exp->add_option("--out", o.out, "Run directory")->required();
  seed_opt(exp, "Override base_seed");

  auto* serve = app.add_subcommand("serve", "Serve the HTTP prediction and explanation API");
  serve->add_option("--model", o.model, "Ensemble JSON")->required();
  serve->add_option("--pool", o.pool, "Neighbor pool / attribution background CSV")->required();
  serve->add_option("--port", o.port, "Port (default: $TABRISK_PORT, else 8080)");
  serve->add_option("--host", o.host, "Bind address")->capture_default_str();
  serve->add_option("--threshold", o.threshold, "Default decision threshold");
  seed_opt(serve, "Default attribution seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*gen) return GenBench(o);
    if (*aug) return Augment(o);
    if (*train) return Train(o);
    if (*eval) return Eval(o);
    if (*explain) return Explain(o);
    if (*gap) return Gap(o);
    if (*exp) return Experiment(o);
    if (*serve) return Serve(o);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitUsage;
}
