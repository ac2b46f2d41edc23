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

#include "tabrisk/nn.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <fstream>
#include <limits>

#include "tabrisk/errors.hpp"
#include "tabrisk/metrics.hpp"

namespace tabrisk {

namespace {

std::uint64_t SplitMix(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::uint64_t FoldSeed(std::uint64_t seed, std::size_t fold, std::uint64_t stream) {
  return SplitMix(SplitMix(seed) ^ (static_cast<std::uint64_t>(fold) * 0x100000001B3ULL + stream));
}

}  // namespace

std::string ToString(Backbone b) {
  switch (b) {
    case Backbone::kV1:
      return "v1";
    case Backbone::kV2:
      return "v2";
    case Backbone::kV3:
      return "v3";
    case Backbone::kV4:
      return "v4";
    case Backbone::kV5:
      return "v5";
    case Backbone::kCustom:
      return "custom";
  }
  return "custom";
}

Backbone ParseBackbone(const std::string& name) {
  std::string n = name;
  if (n.rfind("MLP_", 0) == 0 || n.rfind("mlp_", 0) == 0) n = n.substr(4);
  if (n == "v1") return Backbone::kV1;
  if (n == "v2") return Backbone::kV2;
  if (n == "v3") return Backbone::kV3;
  if (n == "v4") return Backbone::kV4;
  if (n == "v5") return Backbone::kV5;
  if (n == "custom") return Backbone::kCustom;
  throw InvalidArgument("unknown backbone '" + name + "'");
}

std::vector<std::size_t> BackboneHiddenWidths(Backbone b) {
  switch (b) {
    case Backbone::kV1:
      return {64};
    case Backbone::kV2:
      return {64, 32};
    case Backbone::kV3:
      return {128, 64, 32};
    case Backbone::kV4:
      return {128, 64, 64, 32, 16};
    case Backbone::kV5:
      return {256, 128, 128, 64, 64, 32, 16};
    case Backbone::kCustom:
      break;
  }
  throw InvalidArgument("custom backbone has no fixed width table");
}

double Gradients::SquaredNorm() const {
  double s = 0.0;
  for (const auto& w : weight) s += w.squaredNorm();
  for (const auto& b : bias) s += b.squaredNorm();
  return s;
}

Mlp::Mlp(std::vector<std::size_t> widths, Activation hidden, double leaky_slope)
    : widths_(std::move(widths)), activation_(hidden), leaky_slope_(leaky_slope) {
  if (widths_.size() < 2) throw InvalidArgument("an MLP needs input and output widths");
  for (std::size_t w : widths_) {
    if (w == 0) throw InvalidArgument("layer widths must be positive");
  }
  for (std::size_t l = 0; l + 1 < widths_.size(); ++l) {
    const auto in = static_cast<Eigen::Index>(widths_[l]);
    const auto out = static_cast<Eigen::Index>(widths_[l + 1]);
    layers_.push_back({Eigen::MatrixXd::Zero(out, in), Eigen::VectorXd::Zero(out)});
  }
}

void Mlp::InitFanInUniform(Rng& rng) {
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    DenseLayer& layer = layers_[l];
    const double fan_in = static_cast<double>(layer.weight.cols());
    const bool output = l + 1 == layers_.size();
    const double limit = std::sqrt((output ? 3.0 : 6.0) / fan_in);
    for (Eigen::Index r = 0; r < layer.weight.rows(); ++r) {
      for (Eigen::Index c = 0; c < layer.weight.cols(); ++c) {
        layer.weight(r, c) = rng.Uniform(-limit, limit);
      }
    }
    layer.bias.setZero();
  }
}

std::size_t Mlp::ParameterCount() const {
  std::size_t n = 0;
  for (const DenseLayer& l : layers_) n += static_cast<std::size_t>(l.weight.size() + l.bias.size());
  return n;
}

bool Mlp::AllFinite() const {
  for (const DenseLayer& l : layers_) {
    if (!l.weight.allFinite() || !l.bias.allFinite()) return false;
  }
  return true;
}

void Mlp::Activate(Eigen::MatrixXd& z) const {
  if (activation_ == Activation::kRelu) {
    z = z.cwiseMax(0.0);
  } else {
    const double a = leaky_slope_;
    z = z.unaryExpr([a](double v) { return v > 0.0 ? v : a * v; });
  }
}

void Mlp::ActivationGrad(const Eigen::MatrixXd& pre, Eigen::MatrixXd& delta) const {
  const double slope = activation_ == Activation::kRelu ? 0.0 : leaky_slope_;
  delta = delta.binaryExpr(pre, [slope](double d, double z) { return z > 0.0 ? d : slope * d; });
}

Eigen::MatrixXd Mlp::Forward(const Eigen::MatrixXd& x) const {
  if (static_cast<std::size_t>(x.rows()) != input_dim()) {
    throw InvalidArgument("input has " + std::to_string(x.rows()) + " rows, network expects " +
                          std::to_string(input_dim()));
  }
  Eigen::MatrixXd a = x;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    Eigen::MatrixXd z = layers_[l].weight * a;
    z.colwise() += layers_[l].bias;
    if (l + 1 < layers_.size()) Activate(z);
    a = std::move(z);
  }
  return a;
}

Eigen::MatrixXd Mlp::Forward(const Eigen::MatrixXd& x, Cache& cache) const {
  if (static_cast<std::size_t>(x.rows()) != input_dim()) {
    throw InvalidArgument("input has " + std::to_string(x.rows()) + " rows, network expects " +
                          std::to_string(input_dim()));
  }
  cache.inputs.resize(layers_.size());
  cache.pre.resize(layers_.size());
  cache.inputs[0] = x;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    Eigen::MatrixXd& z = cache.pre[l];
    z.noalias() = layers_[l].weight * cache.inputs[l];
    z.colwise() += layers_[l].bias;
    if (l + 1 < layers_.size()) {
      cache.inputs[l + 1] = z;
      Activate(cache.inputs[l + 1]);
    }
  }
  return cache.pre.back();
}

Gradients Mlp::Backward(const Cache& cache, const Eigen::MatrixXd& d_output,
                        Eigen::MatrixXd* d_input) const {
  Gradients g;
  g.weight.resize(layers_.size());
  g.bias.resize(layers_.size());
  Eigen::MatrixXd delta = d_output;
  for (std::size_t l = layers_.size(); l-- > 0;) {
    g.weight[l].noalias() = delta * cache.inputs[l].transpose();
    g.bias[l] = delta.rowwise().sum();
    if (l > 0 || d_input) {
      Eigen::MatrixXd back = layers_[l].weight.transpose() * delta;
      if (l > 0) {
        ActivationGrad(cache.pre[l - 1], back);
        delta = std::move(back);
      } else {
        *d_input = std::move(back);
      }
    }
  }
  return g;
}

nlohmann::json Mlp::ToJson() const {
  nlohmann::json layers = nlohmann::json::array();
  for (const DenseLayer& l : layers_) {
    std::vector<double> w;
    w.reserve(static_cast<std::size_t>(l.weight.size()));
    for (Eigen::Index r = 0; r < l.weight.rows(); ++r) {
      for (Eigen::Index c = 0; c < l.weight.cols(); ++c) w.push_back(l.weight(r, c));
    }
    layers.push_back({{"weight", w}, {"bias", std::vector<double>(l.bias.data(), l.bias.data() + l.bias.size())}});
  }
  return {{"widths", widths_},
          {"activation", activation_ == Activation::kRelu ? "relu" : "leaky_relu"},
          {"leaky_slope", leaky_slope_},
          {"layers", layers}};
}

Mlp Mlp::FromJson(const nlohmann::json& j) {
  const std::string act = j.value("activation", std::string("relu"));
  Mlp net(j.at("widths").get<std::vector<std::size_t>>(),
          act == "relu" ? Activation::kRelu : Activation::kLeakyRelu, j.value("leaky_slope", 0.2));
  const auto& layers = j.at("layers");
  if (layers.size() != net.layers_.size()) throw InvalidArgument("layer count mismatch in model file");
  for (std::size_t l = 0; l < net.layers_.size(); ++l) {
    const auto w = layers[l].at("weight").get<std::vector<double>>();
    const auto b = layers[l].at("bias").get<std::vector<double>>();
    DenseLayer& dl = net.layers_[l];
    if (w.size() != static_cast<std::size_t>(dl.weight.size()) ||
        b.size() != static_cast<std::size_t>(dl.bias.size())) {
      throw InvalidArgument("parameter array size mismatch in layer " + std::to_string(l));
    }
    std::size_t k = 0;
    for (Eigen::Index r = 0; r < dl.weight.rows(); ++r) {
      for (Eigen::Index c = 0; c < dl.weight.cols(); ++c) dl.weight(r, c) = w[k++];
    }
    for (Eigen::Index r = 0; r < dl.bias.size(); ++r) dl.bias(r) = b[static_cast<std::size_t>(r)];
  }
  if (!net.AllFinite()) throw InvalidArgument("model file contains non-finite parameters");
  return net;
}

Adam::Adam(const Mlp& net, double beta1, double beta2, double epsilon)
    : beta1_(beta1), beta2_(beta2), epsilon_(epsilon) {
  for (const DenseLayer& l : net.layers()) {
    m_.weight.push_back(Eigen::MatrixXd::Zero(l.weight.rows(), l.weight.cols()));
    m_.bias.push_back(Eigen::VectorXd::Zero(l.bias.size()));
  }
  v_ = m_;
}

void Adam::Step(Mlp& net, const Gradients& grads, double learning_rate) {
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  const double b1 = beta1_, b2 = beta2_, eps = epsilon_;
  auto update = [&](auto& param, auto& m, auto& v, const auto& g) {
    m = b1 * m + (1.0 - b1) * g;
    v = b2 * v + (1.0 - b2) * g.cwiseProduct(g);
    param.array() -= learning_rate * (m.array() / c1) / ((v.array() / c2).sqrt() + eps);
  };
  for (std::size_t l = 0; l < net.layers().size(); ++l) {
    update(net.layers()[l].weight, m_.weight[l], v_.weight[l], grads.weight[l]);
    update(net.layers()[l].bias, m_.bias[l], v_.bias[l], grads.bias[l]);
  }
}

double Sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

namespace {

double OpenUnit(double p) {
  return std::clamp(p, std::numeric_limits<double>::min(), std::nextafter(1.0, 0.0));
}

}  // namespace

double MlpModel::Predict(std::span<const double> x) const {
  if (x.size() != net.input_dim()) {
    throw InvalidArgument("input width " + std::to_string(x.size()) + " does not match model width " +
                          std::to_string(net.input_dim()));
  }
  for (double v : x) {
    if (!std::isfinite(v)) throw InvalidArgument("input contains a non-finite value");
  }
  const Eigen::Map<const Eigen::VectorXd> col(x.data(), static_cast<Eigen::Index>(x.size()));
  return OpenUnit(Sigmoid(net.Forward(col)(0, 0)));
}

Eigen::VectorXd MlpModel::PredictBatch(const Eigen::MatrixXd& x) const {
  const Eigen::MatrixXd logits = net.Forward(x);
  Eigen::VectorXd p(logits.cols());
  for (Eigen::Index i = 0; i < logits.cols(); ++i) p(i) = OpenUnit(Sigmoid(logits(0, i)));
  return p;
}

nlohmann::json MlpModel::ToJson() const {
  nlohmann::json j = net.ToJson();
  j["backbone"] = ToString(backbone);
  j["metadata"] = {{"seed", meta.seed},
                   {"epochs_run", meta.epochs_run},
                   {"val_macro_f1", meta.val_macro_f1},
                   {"val_loss", meta.val_loss}};
  return j;
}

MlpModel MlpModel::FromJson(const nlohmann::json& j) {
  MlpModel m;
  m.backbone = ParseBackbone(j.value("backbone", std::string("custom")));
  m.net = Mlp::FromJson(j);
  if (m.net.output_dim() != 1) throw InvalidArgument("classifier must have a single output");
  if (j.contains("metadata")) {
    const auto& md = j["metadata"];
    m.meta.seed = md.value("seed", std::uint64_t{0});
    m.meta.epochs_run = md.value("epochs_run", std::size_t{0});
    m.meta.val_macro_f1 = md.value("val_macro_f1", 0.0);
    m.meta.val_loss = md.value("val_loss", 0.0);
  }
  return m;
}

void MlpModel::Save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << ToJson().dump() << '\n';
}

MlpModel MlpModel::Load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open model file " + path.string());
  nlohmann::json j;
  in >> j;
  return FromJson(j);
}

MlpModel MlpInit(Backbone backbone, std::size_t input_dim, std::uint64_t seed,
                 std::vector<std::size_t> custom_hidden) {
  if (input_dim == 0) throw InvalidArgument("input_dim must be at least 1");
  std::vector<std::size_t> widths{input_dim};
  const std::vector<std::size_t> hidden =
      backbone == Backbone::kCustom ? std::move(custom_hidden) : BackboneHiddenWidths(backbone);
  widths.insert(widths.end(), hidden.begin(), hidden.end());
  widths.push_back(1);
  MlpModel model;
  model.backbone = backbone;
  model.net = Mlp(std::move(widths));
  Rng rng(seed);
  model.net.InitFanInUniform(rng);
  model.meta.seed = seed;
  return model;
}

LabeledMatrix LabeledMatrix::Columns(std::span<const std::size_t> idx) const {
  LabeledMatrix out;
  out.x.resize(x.rows(), static_cast<Eigen::Index>(idx.size()));
  out.y.resize(idx.size());
  for (std::size_t k = 0; k < idx.size(); ++k) {
    out.x.col(static_cast<Eigen::Index>(k)) = x.col(static_cast<Eigen::Index>(idx[k]));
    out.y[k] = y[idx[k]];
  }
  return out;
}

LabeledMatrix MakeLabeledMatrix(const Dataset& dataset, const ScalerParams& scaler) {
  LabeledMatrix m;
  m.y = dataset.Labels();
  m.x = ToRowMatrix(dataset, &scaler).transpose();
  return m;
}

double BceLoss(const Mlp& net, const Eigen::MatrixXd& x, std::span<const int> y,
               Gradients* grads) {
  if (y.empty() || static_cast<std::size_t>(x.cols()) != y.size()) {
    throw InvalidArgument("BCE needs a non-empty batch with one label per column");
  }
  Mlp::Cache cache;
  const Eigen::MatrixXd logits = grads ? net.Forward(x, cache) : net.Forward(x);
  const double n = static_cast<double>(y.size());
  Eigen::MatrixXd d_out(1, logits.cols());
  double loss = 0.0;
  for (Eigen::Index i = 0; i < logits.cols(); ++i) {
    const double p_raw = Sigmoid(logits(0, i));
    const double p = std::clamp(p_raw, kProbClip, 1.0 - kProbClip);
    const int yi = y[static_cast<std::size_t>(i)];
    loss -= yi == 1 ? std::log(p) : std::log(1.0 - p);
    const bool clipped = p_raw < kProbClip || p_raw > 1.0 - kProbClip;
    d_out(0, i) = clipped ? 0.0 : (p_raw - yi) / n;
  }
  if (grads) *grads = net.Backward(cache, d_out);
  return loss / n;
}

double BceGradStep(MlpModel& model, const Eigen::MatrixXd& x, std::span<const int> y, Adam& adam,
                   double learning_rate) {
  Gradients g;
  const double loss = BceLoss(model.net, x, y, &g);
  if (!std::isfinite(loss)) throw NumericalError("non-finite loss");
  for (std::size_t l = 0; l < g.weight.size(); ++l) {
    if (!g.weight[l].allFinite() || !g.bias[l].allFinite()) {
      throw NumericalError("non-finite gradient in layer " + std::to_string(l));
    }
  }
  adam.Step(model.net, g, learning_rate);
  return loss;
}

void TrainConfig::Validate() const {
  if (!(learning_rate >= 0.0)) throw InvalidArgument("learning_rate must be non-negative");
  if (early_stop_patience == 0) throw InvalidArgument("early_stop_patience must be positive");
  if (batch_size == 0) throw InvalidArgument("batch_size must be positive");
  if (k_folds < 2) throw InvalidArgument("k_folds must be at least 2");
}

nlohmann::json TrainConfig::ToJson() const {
  return {{"learning_rate", learning_rate}, {"max_epochs", max_epochs},
          {"early_stop_patience", early_stop_patience}, {"batch_size", batch_size},
          {"k_folds", k_folds}, {"seed", seed}};
}

TrainConfig TrainConfig::FromJson(const nlohmann::json& j) {
  TrainConfig c;
  c.learning_rate = j.value("learning_rate", c.learning_rate);
  c.max_epochs = j.value("max_epochs", c.max_epochs);
  c.early_stop_patience = j.value("early_stop_patience", c.early_stop_patience);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.k_folds = j.value("k_folds", c.k_folds);
  c.seed = j.value("seed", c.seed);
  c.Validate();
  return c;
}

FoldResult TrainWithEarlyStopping(MlpModel model, const LabeledMatrix& train,
                                  const LabeledMatrix& val, const TrainConfig& config) {
  config.Validate();
  if (train.size() == 0 || val.size() == 0) {
    throw InvalidArgument("training and validation sets must be non-empty");
  }
  Rng rng(config.seed);
  Adam adam(model.net);

  FoldResult result;
  double best_loss = BceLoss(model.net, val.x, val.y, nullptr);
  Mlp best_net = model.net;
  std::size_t since_best = 0;
  std::vector<std::size_t> order = Iota(train.size());
  result.val_loss_history.push_back(best_loss);

  std::size_t epoch = 0;
  while (epoch < config.max_epochs) {
    ++epoch;
    rng.Shuffle(order);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      const std::span<const std::size_t> idx(order.data() + start, end - start);
      const LabeledMatrix batch = train.Columns(idx);
      try {
        epoch_loss += BceGradStep(model, batch.x, batch.y, adam, config.learning_rate) *
                      static_cast<double>(idx.size());
      } catch (const NumericalError& e) {
        throw NumericalError(std::string(e.what()) + " at epoch " + std::to_string(epoch));
      }
    }
    result.train_loss_history.push_back(epoch_loss / static_cast<double>(order.size()));
    const double val_loss = BceLoss(model.net, val.x, val.y, nullptr);
    result.val_loss_history.push_back(val_loss);
    if (val_loss < best_loss) {
      best_loss = val_loss;
      best_net = model.net;
      result.best_epoch = epoch;
      since_best = 0;
    } else if (++since_best >= config.early_stop_patience) {
      break;
    }
  }

  model.net = std::move(best_net);
  const Eigen::VectorXd probs = model.PredictBatch(val.x);
  result.val_probs.assign(probs.data(), probs.data() + probs.size());
  result.val_loss = best_loss;
  result.val_macro_f1 = MacroF1(val.y, result.val_probs, 0.5);
  result.epochs_run = epoch;
  model.meta.epochs_run = epoch;
  model.meta.val_loss = best_loss;
  model.meta.val_macro_f1 = result.val_macro_f1;
  result.model = std::move(model);
  return result;
}

std::vector<std::vector<std::size_t>> StratifiedFolds(std::span<const int> labels,
                                                      std::size_t k, std::uint64_t seed) {
  if (k < 2) throw InvalidArgument("k-fold needs k >= 2");
  std::vector<std::size_t> cls[2];
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] != 0 && labels[i] != 1) throw InvalidArgument("labels must be 0 or 1");
    cls[labels[i]].push_back(i);
  }
  for (int c = 0; c < 2; ++c) {
    if (cls[c].size() < k) {
      throw InvalidArgument("class " + std::to_string(c) + " has " + std::to_string(cls[c].size()) +
                            " records, fewer than " + std::to_string(k) + " folds");
    }
  }
  Rng rng(seed);
  std::vector<std::vector<std::size_t>> folds(k);
  // The negative class continues the deal where the positive class stopped so
  // fold sizes stay within one of each other.
  std::size_t deal = 0;
  for (int c : {1, 0}) {
    rng.Shuffle(cls[c]);
    for (std::size_t i : cls[c]) folds[deal++ % k].push_back(i);
  }
  for (auto& f : folds) std::sort(f.begin(), f.end());
  return folds;
}

std::vector<FoldResult> KFoldTrain(const LabeledMatrix& data, Backbone backbone,
                                   const TrainConfig& config) {
  config.Validate();
  if (data.size() < config.k_folds) throw InvalidArgument("fewer records than folds");
  const auto folds = StratifiedFolds(data.y, config.k_folds, config.seed);
  std::vector<FoldResult> results(folds.size());
  std::vector<std::exception_ptr> errors(folds.size());

#pragma omp parallel for schedule(dynamic, 1)
  for (std::size_t f = 0; f < folds.size(); ++f) {
    try {
      std::vector<char> in_val(data.size(), 0);
      for (std::size_t r : folds[f]) in_val[r] = 1;
      std::vector<std::size_t> train_rows;
      train_rows.reserve(data.size() - folds[f].size());
      for (std::size_t r = 0; r < data.size(); ++r) {
        if (!in_val[r]) train_rows.push_back(r);
      }
      TrainConfig fold_config = config;
      fold_config.seed = FoldSeed(config.seed, f, 1);
      MlpModel model = MlpInit(backbone, static_cast<std::size_t>(data.x.rows()),
                               FoldSeed(config.seed, f, 0));
      results[f] = TrainWithEarlyStopping(std::move(model), data.Columns(train_rows),
                                          data.Columns(folds[f]), fold_config);
      results[f].fold_index = f;
      results[f].val_rows = folds[f];
    } catch (...) {
      errors[f] = std::current_exception();
    }
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return results;
}

}  // namespace tabrisk
