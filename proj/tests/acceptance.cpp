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

// Acceptance suite. Prints one PASS/FAIL line per criterion and exits 1 if
// any failed. Usage: acceptance [--only NAME]... [--out DIR]

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "augment_oracle.hpp"
#include "grad_check.hpp"
#include "json.hpp"
#include "metrics_oracle.hpp"
#include "tabrisk/augment.hpp"
#include "tabrisk/benchmark_data.hpp"
#include "tabrisk/ensemble.hpp"
#include "tabrisk/experiment.hpp"
#include "tabrisk/explain.hpp"
#include "tabrisk/metrics.hpp"
#include "tabrisk/nn.hpp"
#include "test_util.hpp"

using namespace tabrisk;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  // Records a failed condition; the first few are kept in the detail.
  void Require(bool cond, const std::string& what) {
    if (cond) return;
    if (pass || failures < 3) detail << " [failed: " << what << "]";
    pass = false;
    ++failures;
  }
  int failures = 0;
};

double Seconds(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string Fmt(double v, int prec = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", prec, v);
  return buf;
}

void MetricsOracle(Outcome& o) {
  const auto t0 = std::chrono::steady_clock::now();
  Rng rng(2026);
  std::size_t sets = 0;
  for (int t = 0; t < 200; ++t) {
    const std::size_t n = 1 + rng.Index(80);
    std::vector<int> y(n);
    std::vector<double> p(n);
    for (std::size_t i = 0; i < n; ++i) {
      y[i] = rng.Bernoulli(0.35) ? 1 : 0;
      p[i] = rng.Bernoulli(0.3) ? std::round(rng.Uniform() * 10) / 10 : rng.Uniform();
    }
    const double thr = t % 4 == 0 ? rng.Uniform() : 0.5;
    const MetricsReport r = ClassificationReport(y, p, thr);
    const oracle::Rates b = oracle::BruteRates(y, p, thr);
    const bool same = r.accuracy == b.accuracy && r.sensitivity == b.sensitivity &&
                      r.specificity == b.specificity && r.ppv == b.ppv && r.npv == b.npv &&
                      r.f1_pos == b.f1_pos && r.f1_neg == b.f1_neg &&
                      r.macro_f1 == (b.f1_pos + b.f1_neg) / 2;
    o.Require(same, "random set " + std::to_string(t));
    ++sets;
  }
  // Reference confusion counts: TP 12, FN 7, TN 18, FP 1.
  const MetricsReport fig = ReportFromCounts({12, 18, 1, 7});
  const std::pair<double, double> expect[] = {{fig.accuracy, 0.789}, {fig.sensitivity, 0.632},
                                              {fig.specificity, 0.947}, {fig.f1_pos, 0.750},
                                              {fig.f1_neg, 0.818}, {fig.macro_f1, 0.784}};
  for (const auto& [got, want] : expect) o.Require(std::fabs(got - want) <= 5e-4, Fmt(got) + " vs " + Fmt(want));
  const double secs = Seconds(t0);
  o.Require(secs < 10.0, "runtime");
  o.detail << sets << " random sets exact; acc " << Fmt(fig.accuracy) << " sens " << Fmt(fig.sensitivity)
           << " spec " << Fmt(fig.specificity) << " F1+ " << Fmt(fig.f1_pos) << " F1- " << Fmt(fig.f1_neg)
           << " avg " << Fmt(fig.macro_f1) << "; " << Fmt(secs, 3) << " s";
}

void AurocOracle(Outcome& o) {
  Rng rng(99);
  double worst = 0.0;
  for (int t = 0; t < 100; ++t) {
    const std::size_t n = 4 + rng.Index(120);
    std::vector<int> y(n);
    std::vector<double> p(n);
    for (std::size_t i = 0; i < n; ++i) {
      y[i] = i < 2 ? static_cast<int>(i) : (rng.Bernoulli(0.4) ? 1 : 0);
      // Coarse grid so ties across classes are common.
      p[i] = std::round(rng.Uniform() * 12) / 12;
    }
    worst = std::max(worst, std::fabs(Auroc(y, p) - oracle::PairAuroc(y, p)));
  }
  o.Require(worst <= 1e-12, "max difference " + Fmt(worst));
  o.detail << "100 sets with ties, max |trapezoid - pairs| = " << Fmt(worst, 3);
}

void GradientCheck(Outcome& o) {
  const auto t0 = std::chrono::steady_clock::now();
  const std::size_t d = 34;
  Rng rng(31);
  std::ostringstream per;
  for (Backbone b : {Backbone::kV1, Backbone::kV2, Backbone::kV3, Backbone::kV4, Backbone::kV5}) {
    oracle::GradientCheck total;
    // Every parameter of the two small backbones; 100 weights and 100
    // biases per layer of the larger ones.
    const std::size_t samples = b == Backbone::kV1 || b == Backbone::kV2 ? 0 : 100;
    for (int draw = 0; draw < 10; ++draw) {
      MlpModel m = MlpInit(b, d, static_cast<std::uint64_t>(draw));
      oracle::RandomizeParameters(m.net, rng);
      Eigen::MatrixXd x(static_cast<Eigen::Index>(d), 8);
      for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = rng.Uniform();
      std::vector<int> y(8);
      for (int& v : y) v = rng.Bernoulli(0.5) ? 1 : 0;
      const oracle::GradientCheck g = oracle::CheckGradient(m.net, x, y, rng, samples);
      total.max_error = std::max(total.max_error, g.max_error);
      total.probes += g.probes;
      total.kinks += g.kinks;
    }
    o.Require(total.max_error < 1e-4, ToString(b) + " error " + Fmt(total.max_error));
    o.Require(total.probes > 0, ToString(b) + " probed nothing");
    per << " " << ToString(b) << " " << Fmt(total.max_error, 2) << " (" << total.probes << " probes, "
        << total.kinks << " kink)";
  }
  const double secs = Seconds(t0);
  o.Require(secs < 60.0, "runtime");
  o.detail << "d=34, 10 draws each, max rel. error:" << per.str() << "; " << Fmt(secs, 3) << " s";
}

void DistributionGapCheck(Outcome& o) {
  struct Row {
    double val, test, gap, tol;
  };
  const Row rows[] = {{0.134, 0.863, 544, 2}, {0.099, 0.865, 774, 3}, {0.077, 1.024, 1230, 3}};
  for (const Row& r : rows) {
    const double g = DistributionGap(std::vector<double>{r.val}, r.test).gap_percent;
    o.Require(std::fabs(g - r.gap) <= r.tol, Fmt(g) + " vs " + Fmt(r.gap));
    o.detail << "(" << r.val << ", " << r.test << ") -> " << Fmt(g, 5) << " %  ";
  }
}

void Voting(Outcome& o) {
  const VotingWeights w = AssignVotingWeights(std::vector<double>{0.8, 0.75, 0.7, 0.69, 0.71}, 0.7);
  o.Require(w.alphas == std::vector<double>{0.8, 0.75, 0.0, 0.0, 0.71}, "gate");
  o.Require(!w.fallback, "fallback raised");

  EnsembleModel e;
  e.schema = testing::NumericSchema(1);
  e.scaler.min = {0.0};
  e.scaler.max = {1.0};
  for (double p : {0.9, 0.2, 0.99}) {
    MlpModel m;
    m.net = Mlp({1, 1});
    m.net.layers()[0].bias << std::log(p / (1 - p));
    e.members.push_back(m);
  }
  e.alphas = {0.8, 0.75, 0.0};
  const double p = e.PredictProba(std::vector<double>{0.5});
  o.Require(std::fabs(p - 0.5613) <= 1e-4, "p = " + Fmt(p));
  o.detail << "F1 <= 0.7 gets weight 0 (0.7 -> 0, 0.71 -> 0.71); alpha=(0.8,0.75,0), f=(0.9,0.2,0.99) -> "
           << Fmt(p, 6);
}

// Checks one generated record against its seed and neighbor: numerics on the
// segment, discrete slots copied from the nearer endpoint.
bool OnSegment(const FeatureSchema& s, const Dataset& ds, const CaseRecord& rec, const AdasynSample& t) {
  const std::vector<double>& a = ds.record(t.seed).x;
  const std::vector<double>& b = ds.record(t.neighbor).x;
  if (t.lambda < 0.0 || t.lambda > 1.0) return false;
  for (std::size_t f = 0; f < s.num_features(); ++f) {
    const FeatureSpec& spec = s.feature(f);
    const std::size_t off = s.offset(f);
    for (std::size_t k = 0; k < spec.width(); ++k) {
      const std::size_t c = off + k;
      if (spec.kind == FeatureKind::kNumeric) {
        if (rec.x[c] != a[c] + t.lambda * (b[c] - a[c])) return false;
      } else if (rec.x[c] != (t.lambda <= 0.5 ? a[c] : b[c])) {
        return false;
      }
    }
  }
  return true;
}

void AdasynGeometry(Outcome& o, const Dataset& bench_train) {
  std::size_t points = 0;
  std::size_t off_segment = 0;
  struct Toy {
    Dataset ds;
    int target;
    std::size_t n;
    std::size_t k;
  };
  std::vector<Toy> toys;
  toys.push_back({testing::Blobs(300, 40, 3, 1.5, 1), 1, 2500, 5});
  toys.push_back({testing::Blobs(60, 200, 5, 0.5, 2), 0, 2500, 3});
  toys.push_back({testing::MixedToy(250, 50, 3), 1, 2500, 5});
  toys.push_back({testing::MixedToy(80, 120, 4, 4.0), 0, 2500, 7});
  for (std::size_t i = 0; i < toys.size(); ++i) {
    const Toy& t = toys[i];
    const AdasynOutput out = AdasynOversample(t.ds, t.target, t.n, t.k, 100 + i);
    for (std::size_t r = 0; r < out.records.size(); ++r) {
      const AdasynSample& s = out.trace[r];
      const bool ok = *out.records[r].y == t.target && *t.ds.record(s.seed).y == t.target &&
                      *t.ds.record(s.neighbor).y == t.target && s.seed != s.neighbor &&
                      OnSegment(t.ds.schema(), t.ds, out.records[r], s);
      off_segment += ok ? 0 : 1;
      ++points;
    }
    o.Require(out.allocation == oracle::BruteAdasynAllocation(t.ds, t.target, t.n, t.k),
              "allocation toy " + std::to_string(i));
  }
  o.Require(points == 10000, "generated " + std::to_string(points));
  o.Require(off_segment == 0, std::to_string(off_segment) + " points off segment");

  AugmentConfig cfg;
  cfg.method = AugmentMethod::kAdasyn;
  cfg.seed = 5;
  const auto [out, report] = AdasynBalanceLoop(bench_train, cfg);
  const std::size_t pos = out.CountLabel(1), neg = out.CountLabel(0);
  o.Require(pos == neg, "unbalanced");
  o.Require(out.size() >= 5 * bench_train.size(), "total below 5x input");
  o.Require(pos >= cfg.min_per_class, "below min_per_class");
  o.detail << points << " toy points on their segments; benchmark train " << bench_train.size() << " -> "
           << pos << "/" << neg << " (min_per_class " << cfg.min_per_class << ")";
}

void Silhouette(Outcome& o, const Dataset& bench_train) {
  const auto t0 = std::chrono::steady_clock::now();
  Rng rng(77);
  double worst = 0.0;
  for (int t = 0; t < 50; ++t) {
    const std::size_t n = 2 + rng.Index(499);
    const std::size_t d = 1 + rng.Index(8);
    RowMatrix p(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
    for (Eigen::Index i = 0; i < p.size(); ++i) p.data()[i] = rng.Normal();
    std::vector<int> y(n);
    for (std::size_t i = 0; i < n; ++i) y[i] = i < 2 ? static_cast<int>(i) : (rng.Bernoulli(0.3) ? 1 : 0);
    worst = std::max(worst, std::fabs(SilhouetteScore(p, y) - oracle::BruteSilhouette(p, y)));
  }
  o.Require(worst <= 1e-12, "max difference " + Fmt(worst));

  // Restricted runs: replay every decision from the trajectory, check the
  // first accepted scores against a from-scratch silhouette, and confirm a
  // flipped decision is detected.
  std::size_t runs = 0, steps = 0, rejected = 0, prefix_checks = 0;
  auto check_run = [&](const Dataset& input, const AugmentConfig& cfg, const GanModel& gan,
                       std::size_t n_prefix) {
    const auto [out, report] = GanThreePhaseAugment(input, cfg, gan);
    ++runs;
    o.Require(ReplayTrajectory(report), "replay");
    for (const SilhouetteStep& s : report.trajectory) {
      if (!s.restricted) continue;
      ++steps;
      rejected += s.accepted ? 0 : 1;
    }
    if (!report.trajectory.empty()) {
      AugmentReport tampered = report;
      tampered.trajectory.front().accepted = !tampered.trajectory.front().accepted;
      o.Require(!ReplayTrajectory(tampered), "tampered trajectory replayed");
    }
    const ScalerParams sc = FitMinMax(input);
    const RowMatrix all = ToRowMatrix(out, &sc);
    const std::vector<int> labels = out.Labels();
    std::size_t rows = input.size(), done = 0;
    for (const SilhouetteStep& s : report.trajectory) {
      if (done >= n_prefix) break;
      if (!s.accepted) continue;
      rows += s.batch_size;
      if (!s.restricted) continue;
      const std::vector<int> py(labels.begin(), labels.begin() + static_cast<std::ptrdiff_t>(rows));
      const double brute = oracle::BruteSilhouette(all.topRows(static_cast<Eigen::Index>(rows)), py);
      o.Require(std::fabs(s.score - brute) <= 1e-9, "prefix silhouette");
      ++done;
      ++prefix_checks;
    }
  };

  const Dataset toy = testing::Blobs(90, 30, 2, 1.0, 13);
  const GanModel toy_gan = GanTrain(toy, testing::SmallGan(120, 6));
  for (Restriction r : {Restriction::kNegativeOnly, Restriction::kBoth}) {
    AugmentConfig cfg;
    cfg.restriction = r;
    cfg.batch_size_generated = 40;
    cfg.seed = 4;
    cfg.max_consecutive_discards = 1000;
    check_run(toy, cfg, toy_gan, 8);
  }

  GanConfig gc;
  gc.seed = 21;
  const GanModel bench_gan = GanTrain(bench_train, gc);
  // Gating both classes starves on the benchmark (overlapping classes, low
  // initial score), so the benchmark run gates negatives only.
  AugmentConfig cfg;
  cfg.restriction = Restriction::kNegativeOnly;
  cfg.seed = 8;
  cfg.max_consecutive_discards = 1000;
  check_run(bench_train, cfg, bench_gan, 2);
  o.Require(rejected > 0, "no batch was ever rejected");
  o.detail << "50 random sets, max |fast - brute| = " << Fmt(worst, 3) << "; " << runs
           << " restricted runs replayed (" << steps << " gated steps, " << rejected << " rejected, "
           << prefix_checks << " prefix scores vs brute force); " << Fmt(Seconds(t0), 3) << " s";
}

struct EndToEnd {
  ExperimentResult aimen;
  ExperimentResult baseline;
  fs::path aimen_dir;
  double aimen_seconds = 0.0;
  double baseline_seconds = 0.0;
};

ExperimentConfig EndToEndConfig(Pipeline p) {
  ExperimentConfig c;
  c.pipeline = p;
  c.backbone = Backbone::kV5;
  c.n_repetitions = 5;
  c.base_seed = 0;
  c.train.k_folds = 8;
  // Reduced caps so five repetitions of both pipelines fit a single core.
  c.train.max_epochs = 40;
  c.train.early_stop_patience = 10;
  return c;
}

void EndToEndCheck(Outcome& o, const EndToEnd& e) {
  const auto& a = e.aimen.repetitions;
  const auto& b = e.baseline.repetitions;
  o.Require(a.size() == 5 && b.size() == 5, "repetition count");
  std::size_t wins = 0, pure = 0;
  std::ostringstream f1;
  for (std::size_t r = 0; r < std::min(a.size(), b.size()); ++r) {
    o.Require(a[r].ok && b[r].ok, "rep " + std::to_string(r) + " failed: " + a[r].error + b[r].error);
    o.Require(a[r].seed == b[r].seed, "seeds differ");
    const bool both_pure = a[r].purity.passed() && b[r].purity.passed();
    pure += both_pure ? 1 : 0;
    o.Require(both_pure, "purity rep " + std::to_string(r));
    const bool win = a[r].test.macro_f1 > b[r].test.macro_f1;
    wins += win ? 1 : 0;
    f1 << " " << Fmt(a[r].test.macro_f1, 3) << (win ? ">" : "<=") << Fmt(b[r].test.macro_f1, 3);
  }
  o.Require(wins >= 4, std::to_string(wins) + "/5 wins");
  o.Require(e.aimen_seconds < 1800.0, "aimen run " + Fmt(e.aimen_seconds) + " s");
  o.detail << "aimen_ctgan v5 vs no_augment, test avg F1 per rep:" << f1.str() << "; " << wins
           << "/5 wins; purity " << pure << "/5; aimen run " << Fmt(e.aimen_seconds, 4) << " s, baseline "
           << Fmt(e.baseline_seconds, 4) << " s";
}

void CounterfactualCheck(Outcome& o, const EndToEnd& e) {
  std::size_t cases = 0, flipped = 0, verified = 0, changes = 0;
  for (const RepetitionResult& rep : e.aimen.repetitions) {
    if (!rep.ok) continue;
    const fs::path dir = e.aimen_dir / ("rep_" + std::to_string(rep.index));
    const EnsembleModel model = EnsembleModel::Load(dir / "ensemble.json");
    const FeatureSchema& s = *model.schema;
    nlohmann::json cfs;
    std::ifstream(dir / "counterfactuals.json") >> cfs;
    const nlohmann::json& full = cfs.at("max_changes_full");
    o.Require(full.size() == rep.ce_candidates, "case count rep " + std::to_string(rep.index));
    if (rep.ce_full) o.Require(rep.ce_full->accuracy == 1.0, "reported accuracy");
    for (const nlohmann::json& c : full) {
      ++cases;
      const std::vector<double> x = EncodeFeatureMap(s, c.at("original"));
      const std::vector<double> cf = EncodeFeatureMap(s, c.at("counterfactual"));
      o.Require(model.Predict(x) == 1, "case not abnormal");
      flipped += c.at("flipped").get<bool>() ? 1 : 0;
      // Independent re-classification of the stored counterfactual.
      const bool trip = model.Predict(cf) == 0;
      verified += trip ? 1 : 0;
      o.Require(trip, "round trip rep " + std::to_string(rep.index));
      const std::size_t k = DifferingFeatures(s, x, cf).size();
      o.Require(k == c.at("sparsity").get<std::size_t>(), "sparsity mismatch");
      changes += k;
    }
  }
  o.Require(cases > 0, "no abnormal-classified test cases");
  const double acc = cases ? static_cast<double>(flipped) / static_cast<double>(cases) : 0.0;
  const double sparsity = cases ? static_cast<double>(changes) / static_cast<double>(cases) : 0.0;
  o.Require(acc == 1.0, "accuracy " + Fmt(acc));
  o.Require(sparsity <= 6.0, "sparsity " + Fmt(sparsity));
  o.detail << cases << " abnormal-classified test cases over 5 reps, max_changes = d: accuracy "
           << Fmt(acc, 3) << ", sparsity mean " << Fmt(sparsity, 3) << ", " << verified
           << " re-classified opposite after reload";
}

void ShapleyCheck(Outcome& o, const Dataset& bench) {
  const auto t0 = std::chrono::steady_clock::now();
  const FeatureSchema& s = bench.schema();
  const LabelRule rule = LabelRule::Default();
  const auto [a, c] = rule.RawCoefficients(s);
  const BatchScoreFn f = [&](const RowMatrix& rows) {
    std::vector<double> out(static_cast<std::size_t>(rows.rows()));
    for (Eigen::Index i = 0; i < rows.rows(); ++i) {
      const double* r = rows.row(i).data();
      out[static_cast<std::size_t>(i)] = rule.Score(s, std::span<const double>(r, s.width()));
    }
    return out;
  };
  std::vector<double> mean(s.width(), 0.0);
  for (const CaseRecord& r : bench.records()) {
    for (std::size_t j = 0; j < s.width(); ++j) mean[j] += r.x[j] / static_cast<double>(bench.size());
  }
  std::size_t checked = 0;
  double worst_z = 0.0, worst_residual = 0.0;
  for (std::size_t row : {3u, 250u, 777u, 1200u, 1456u}) {
    const std::vector<double>& x = bench.record(row).x;
    const Attribution at = ShapleyAttribution(f, s, x, bench, 2000, 40 + row);
    for (std::size_t fi = 0; fi < s.num_features(); ++fi) {
      double exact = 0.0;
      for (std::size_t k = 0; k < s.feature(fi).width(); ++k) {
        const std::size_t j = s.offset(fi) + k;
        exact += a[j] * (x[j] - mean[j]);
      }
      const double diff = std::fabs(at.values[fi] - exact);
      const double se = at.std_errors[fi];
      o.Require(diff <= 3.0 * se + 1e-12, at.features[fi] + " off by " + Fmt(diff) + " (se " + Fmt(se) + ")");
      if (se > 0) worst_z = std::max(worst_z, diff / se);
      ++checked;
    }
    worst_residual = std::max(worst_residual, std::fabs(at.EfficiencyResidual()));
  }
  o.Require(worst_residual < 0.02, "residual " + Fmt(worst_residual));
  o.detail << checked << " feature values on 5 records at n_samples = 2000, max |error|/SE " << Fmt(worst_z, 3)
           << ", max efficiency residual " << Fmt(worst_residual, 3) << "; " << Fmt(Seconds(t0), 3) << " s";
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<std::string> only;
  fs::path out_dir = fs::temp_directory_path() / "tabrisk_acceptance";
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--only" && i + 1 < argc) {
      only.push_back(argv[++i]);
    } else if (arg == "--out" && i + 1 < argc) {
      out_dir = argv[++i];
    } else {
      std::fprintf(stderr, "usage: acceptance [--only NAME]... [--out DIR]\n");
      return 2;
    }
  }
  auto wanted = [&](const std::string& name) {
    return only.empty() || std::find(only.begin(), only.end(), name) != only.end();
  };

  const SchemaPtr schema = testing::BenchmarkSchema();
  const Dataset bench = GenerateBenchmarkDataset(BenchmarkConfig{}, schema);
  const Dataset bench_train = SplitBalancedTest(bench, 19, 0).train;

  int failed = 0;
  auto run = [&](const std::string& name, const std::function<void(Outcome&)>& fn) {
    if (!wanted(name)) return;
    Outcome o;
    try {
      fn(o);
    } catch (const std::exception& ex) {
      o.Require(false, std::string("exception: ") + ex.what());
    }
    std::printf("%s %s: %s\n", o.pass ? "PASS" : "FAIL", name.c_str(), o.detail.str().c_str());
    std::fflush(stdout);
    failed += o.pass ? 0 : 1;
  };

  run("metrics", MetricsOracle);
  run("auroc", AurocOracle);
  run("gradient", GradientCheck);
  run("gap", DistributionGapCheck);
  run("voting", Voting);
  run("adasyn", [&](Outcome& o) { AdasynGeometry(o, bench_train); });
  run("silhouette", [&](Outcome& o) { Silhouette(o, bench_train); });

  if (wanted("end_to_end") || wanted("counterfactuals")) {
    EndToEnd e;
    bool ran = false;
    std::string error;
    try {
      fs::remove_all(out_dir);
      e.aimen_dir = out_dir / "aimen_ctgan";
      auto t0 = std::chrono::steady_clock::now();
      e.aimen = RunExperiment(EndToEndConfig(Pipeline::kAimenCtgan), bench, e.aimen_dir);
      e.aimen_seconds = Seconds(t0);
      t0 = std::chrono::steady_clock::now();
      e.baseline = RunExperiment(EndToEndConfig(Pipeline::kNoAugment), bench, out_dir / "no_augment");
      e.baseline_seconds = Seconds(t0);
      ran = true;
    } catch (const std::exception& ex) {
      error = ex.what();
    }
    auto guarded = [&](Outcome& o, void (*fn)(Outcome&, const EndToEnd&)) {
      if (!ran) {
        o.Require(false, "experiment failed: " + error);
        return;
      }
      fn(o, e);
    };
    run("end_to_end", [&](Outcome& o) { guarded(o, EndToEndCheck); });
    run("counterfactuals", [&](Outcome& o) { guarded(o, CounterfactualCheck); });
  }
  run("shapley", [&](Outcome& o) { ShapleyCheck(o, bench); });

  std::printf("%s: %d criteria failed\n", failed ? "FAIL" : "PASS", failed);
  return failed ? 1 : 0;
}
