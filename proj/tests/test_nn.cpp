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
#include <filesystem>
#include <set>

#include "doctest.h"
#include "grad_check.hpp"
#include "tabrisk/errors.hpp"
#include "tabrisk/metrics.hpp"
#include "tabrisk/nn.hpp"
#include "test_util.hpp"

using namespace tabrisk;

namespace {

std::size_t ClosedFormCount(std::vector<std::size_t> widths) {
  std::size_t n = 0;
  for (std::size_t i = 0; i + 1 < widths.size(); ++i) n += (widths[i] + 1) * widths[i + 1];
  return n;
}

bool SameParameters(const Mlp& a, const Mlp& b) {
  if (a.num_layers() != b.num_layers()) return false;
  for (std::size_t l = 0; l < a.num_layers(); ++l) {
    if (a.layers()[l].weight != b.layers()[l].weight) return false;
    if (a.layers()[l].bias != b.layers()[l].bias) return false;
  }
  return true;
}

LabeledMatrix SeparableToy(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  LabeledMatrix m;
  m.x.resize(2, static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    const int y = static_cast<int>(i % 2);
    const double a = rng.Uniform(0.0, 1.0);
    const double b = y == 1 ? rng.Uniform(0.55, 1.0) : rng.Uniform(0.0, 0.45);
    m.x(0, static_cast<Eigen::Index>(i)) = a;
    m.x(1, static_cast<Eigen::Index>(i)) = b;
    m.y.push_back(y);
  }
  return m;
}

}  // namespace

TEST_CASE("backbone table") {
  CHECK(BackboneHiddenWidths(Backbone::kV1) == std::vector<std::size_t>{64});
  CHECK(BackboneHiddenWidths(Backbone::kV5).size() == 7);
  CHECK(ParseBackbone("MLP_v3") == Backbone::kV3);
  CHECK(ParseBackbone("v2") == Backbone::kV2);
  CHECK_THROWS_AS(ParseBackbone("v9"), InvalidArgument);
  CHECK_THROWS_AS(BackboneHiddenWidths(Backbone::kCustom), InvalidArgument);

  const MlpModel v5 = MlpInit(Backbone::kV5, 34, 1);
  CHECK(v5.net.num_layers() == 8);
  const MlpModel v1 = MlpInit(Backbone::kV1, 34, 1);
  CHECK(v1.net.ParameterCount() == ClosedFormCount({34, 64, 1}));
  CHECK(v1.net.ParameterCount() == 35 * 64 + 65);
  for (Backbone b : {Backbone::kV2, Backbone::kV3, Backbone::kV4, Backbone::kV5}) {
    std::vector<std::size_t> w{34};
    for (std::size_t h : BackboneHiddenWidths(b)) w.push_back(h);
    w.push_back(1);
    CHECK(MlpInit(b, 34, 3).net.ParameterCount() == ClosedFormCount(w));
  }
}

TEST_CASE("initialization is seeded") {
  const MlpModel a = MlpInit(Backbone::kV3, 10, 42), b = MlpInit(Backbone::kV3, 10, 42);
  const MlpModel c = MlpInit(Backbone::kV3, 10, 43);
  CHECK(SameParameters(a.net, b.net));
  CHECK_FALSE(SameParameters(a.net, c.net));
  for (const DenseLayer& l : a.net.layers()) CHECK(l.bias.isZero());
  const double limit = std::sqrt(6.0 / 10.0);
  CHECK(a.net.layers()[0].weight.cwiseAbs().maxCoeff() <= limit);
}

TEST_CASE("forward pass") {
  MlpModel zero;
  zero.net = Mlp({3, 5, 1});
  CHECK(zero.Predict(std::vector<double>{1, 2, 3}) == 0.5);
  CHECK(zero.Predict(std::vector<double>{-40, 0, 9}) == 0.5);

  MlpModel hand;
  hand.net = Mlp({2, 2, 1});
  hand.net.layers()[0].weight << 0.5, -1.0, 2.0, 0.25;
  hand.net.layers()[0].bias << 0.1, -0.3;
  hand.net.layers()[1].weight << 1.5, -0.7;
  hand.net.layers()[1].bias << 0.2;
  // Hidden pre-activations at (0.4, 0.9): -0.6 and 0.725; ReLU zeroes the
  // first, so the logit is -0.7 * 0.725 + 0.2 = -0.3075.
  const double expected = 1.0 / (1.0 + std::exp(0.3075));
  CHECK(std::fabs(hand.Predict(std::vector<double>{0.4, 0.9}) - expected) <= 1e-12);

  MlpModel nullfirst = MlpInit(Backbone::kV2, 4, 5);
  nullfirst.net.layers()[0].weight.setZero();
  const double p0 = nullfirst.Predict(std::vector<double>{0.1, 0.2, 0.3, 0.4});
  CHECK(nullfirst.Predict(std::vector<double>{10, -20, 3e5, 7}) == p0);

  CHECK_THROWS_AS(hand.Predict(std::vector<double>{1.0}), InvalidArgument);
  CHECK_THROWS_AS(hand.Predict(std::vector<double>{1.0, NAN}), InvalidArgument);
}

TEST_CASE("gradient matches finite differences on a 3-4-1 net") {
  Rng rng(17);
  Mlp net({3, 4, 1});
  oracle::RandomizeParameters(net, rng);
  Eigen::MatrixXd x = Eigen::MatrixXd::Random(3, 5);
  const std::vector<int> y{1, 0, 0, 1, 1};
  CHECK(oracle::MaxGradientError(net, x, y, rng) < 1e-4);
}

TEST_CASE("leaky activation gradient") {
  Rng rng(3);
  Mlp net({4, 6, 3, 1}, Activation::kLeakyRelu, 0.2);
  oracle::RandomizeParameters(net, rng);
  Eigen::MatrixXd x = Eigen::MatrixXd::Random(4, 6);
  const std::vector<int> y{1, 0, 0, 1, 1, 0};
  CHECK(oracle::MaxGradientError(net, x, y, rng) < 1e-4);
}

TEST_CASE("input gradient") {
  Rng rng(8);
  Mlp net({3, 4, 2});
  oracle::RandomizeParameters(net, rng);
  Eigen::MatrixXd x = Eigen::MatrixXd::Random(3, 2);
  Mlp::Cache cache;
  const Eigen::MatrixXd out = net.Forward(x, cache);
  // Loss = sum of outputs, so d_output is all ones.
  Eigen::MatrixXd dx;
  net.Backward(cache, Eigen::MatrixXd::Ones(out.rows(), out.cols()), &dx);
  const double h = 1e-6;
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    for (Eigen::Index c = 0; c < x.cols(); ++c) {
      Eigen::MatrixXd up = x, down = x;
      up(r, c) += h;
      down(r, c) -= h;
      const double fd = (net.Forward(up).sum() - net.Forward(down).sum()) / (2 * h);
      CHECK(oracle::RelativeError(dx(r, c), fd) < 1e-5);
    }
  }
}

TEST_CASE("gradient step contracts") {
  MlpModel model = MlpInit(Backbone::kV1, 3, 2);
  const MlpModel before = model;
  Adam adam(model.net);
  Eigen::MatrixXd x = Eigen::MatrixXd::Random(3, 4);
  const std::vector<int> y{1, 0, 1, 0};
  BceGradStep(model, x, y, adam, 0.0);
  CHECK(SameParameters(model.net, before.net));
  CHECK(adam.steps() == 1);

  // A confidently correct single example sits at the clipped optimum.
  MlpModel sure;
  sure.net = Mlp({1, 1});
  sure.net.layers()[0].bias << 40.0;
  Gradients g;
  BceLoss(sure.net, Eigen::MatrixXd::Ones(1, 1), std::vector<int>{1}, &g);
  CHECK(std::sqrt(g.SquaredNorm()) < 1e-6);

  MlpModel bad = MlpInit(Backbone::kV1, 3, 2);
  bad.net.layers()[0].weight(0, 0) = NAN;
  Adam adam2(bad.net);
  CHECK_THROWS_AS(BceGradStep(bad, x, y, adam2, 1e-3), NumericalError);
}

TEST_CASE("early stopping") {
  const LabeledMatrix train = SeparableToy(200, 1), val = SeparableToy(100, 2);
  TrainConfig cfg;
  cfg.max_epochs = 0;
  const MlpModel init = MlpInit(Backbone::kV1, 2, 9);
  const FoldResult none = TrainWithEarlyStopping(init, train, val, cfg);
  CHECK(none.epochs_run == 0);
  CHECK(SameParameters(none.model.net, init.net));

  cfg.max_epochs = 300;
  cfg.early_stop_patience = 20;
  cfg.learning_rate = 1e-2;
  cfg.batch_size = 16;
  cfg.seed = 4;
  const FoldResult fit = TrainWithEarlyStopping(init, train, val, cfg);
  CHECK(fit.val_macro_f1 >= 0.95);
  CHECK(fit.val_loss == *std::min_element(fit.val_loss_history.begin(), fit.val_loss_history.end()));
  CHECK(fit.val_loss <= fit.val_loss_history.back());
  CHECK(fit.val_loss == doctest::Approx(BceLoss(fit.model.net, val.x, val.y, nullptr)).epsilon(1e-12));

  // Independent logistic regression by plain gradient descent reaches the
  // same quality on this toy set.
  double w0 = 0, w1 = 0, b = 0;
  for (int it = 0; it < 3000; ++it) {
    double g0 = 0, g1 = 0, gb = 0;
    for (std::size_t i = 0; i < train.size(); ++i) {
      const auto c = static_cast<Eigen::Index>(i);
      const double p = 1 / (1 + std::exp(-(w0 * train.x(0, c) + w1 * train.x(1, c) + b)));
      const double r = p - train.y[i];
      g0 += r * train.x(0, c);
      g1 += r * train.x(1, c);
      gb += r;
    }
    w0 -= 0.5 * g0 / 200;
    w1 -= 0.5 * g1 / 200;
    b -= 0.5 * gb / 200;
  }
  std::vector<double> lr(val.size());
  for (std::size_t i = 0; i < val.size(); ++i) {
    const auto c = static_cast<Eigen::Index>(i);
    lr[i] = 1 / (1 + std::exp(-(w0 * val.x(0, c) + w1 * val.x(1, c) + b)));
  }
  CHECK(MacroF1(val.y, lr, 0.5) >= 0.95);
}

TEST_CASE("stratified folds") {
  std::vector<int> labels(10000);
  for (std::size_t i = 0; i < labels.size(); ++i) labels[i] = static_cast<int>(i % 2);
  const auto folds = StratifiedFolds(labels, 8, 3);
  REQUIRE(folds.size() == 8);
  std::set<std::size_t> seen;
  for (const auto& f : folds) {
    CHECK(f.size() == 1250);
    std::size_t pos = 0;
    for (std::size_t r : f) pos += static_cast<std::size_t>(labels[r]);
    CHECK(pos == 625);
    CHECK(std::is_sorted(f.begin(), f.end()));
    seen.insert(f.begin(), f.end());
  }
  CHECK(seen.size() == 10000);

  const auto small = StratifiedFolds(std::vector<int>{1, 0, 1, 0}, 2, 0);
  for (const auto& f : small) {
    REQUIRE(f.size() == 2);
    CHECK(std::vector<int>{1, 0, 1, 0}[f[0]] + std::vector<int>{1, 0, 1, 0}[f[1]] == 1);
  }
  CHECK_THROWS_AS(StratifiedFolds(std::vector<int>{1, 0, 0}, 2, 0), InvalidArgument);
  CHECK(StratifiedFolds(labels, 8, 3) == folds);
}

TEST_CASE("k-fold training returns one result per fold") {
  const LabeledMatrix data = SeparableToy(80, 6);
  TrainConfig cfg;
  cfg.max_epochs = 2;
  cfg.k_folds = 4;
  const auto results = KFoldTrain(data, Backbone::kV1, cfg);
  REQUIRE(results.size() == 4);
  std::set<std::size_t> rows;
  for (std::size_t k = 0; k < 4; ++k) {
    CHECK(results[k].fold_index == k);
    CHECK(results[k].val_rows.size() == 20);
    CHECK(results[k].val_probs.size() == 20);
    rows.insert(results[k].val_rows.begin(), results[k].val_rows.end());
  }
  CHECK(rows.size() == 80);
  const auto again = KFoldTrain(data, Backbone::kV1, cfg);
  for (std::size_t k = 0; k < 4; ++k) CHECK(SameParameters(again[k].model.net, results[k].model.net));
}

TEST_CASE("model serialization round trip") {
  MlpModel m = MlpInit(Backbone::kV2, 6, 12);
  m.meta.seed = 12;
  m.meta.val_macro_f1 = 0.75;
  const MlpModel back = MlpModel::FromJson(m.ToJson());
  CHECK(SameParameters(m.net, back.net));
  CHECK(back.backbone == Backbone::kV2);
  CHECK(back.meta.val_macro_f1 == 0.75);
  const auto path = std::filesystem::temp_directory_path() / "tabrisk_model_test.json";
  m.Save(path);
  CHECK(SameParameters(MlpModel::Load(path).net, m.net));
  std::filesystem::remove(path);
}
