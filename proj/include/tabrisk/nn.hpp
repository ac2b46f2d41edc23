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

#ifndef TABRISK_NN_HPP_
#define TABRISK_NN_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"
#include "tabrisk/dataset.hpp"
#include "tabrisk/rng.hpp"
#include "tabrisk/scaler.hpp"

namespace tabrisk {

// Classifier backbones, v1 (smallest) through v5 (eight weight layers).
enum class Backbone { kV1, kV2, kV3, kV4, kV5, kCustom };

std::string ToString(Backbone b);
// Accepts "v1".."v5", "MLP_v1".."MLP_v5" and "custom".
Backbone ParseBackbone(const std::string& name);
// Hidden-layer widths; kCustom has none of its own and throws.
std::vector<std::size_t> BackboneHiddenWidths(Backbone b);

enum class Activation { kRelu, kLeakyRelu };

struct DenseLayer {
  Eigen::MatrixXd weight;  // out x in
  Eigen::VectorXd bias;    // out
};

struct Gradients {
  std::vector<Eigen::MatrixXd> weight;
  std::vector<Eigen::VectorXd> bias;

  double SquaredNorm() const;
};

// Fully connected network with a linear output layer. Samples are columns:
// Forward maps an (in x batch) matrix to (out x batch) logits. Output heads
// (sigmoid, softmax, ...) are applied by the caller.
class Mlp {
 public:
  struct Cache {
    std::vector<Eigen::MatrixXd> inputs;  // inputs[l] feeds layer l
    std::vector<Eigen::MatrixXd> pre;     // pre-activation of layer l
  };

  Mlp() = default;
  // widths = {input, hidden..., output}; parameters start at zero.
  explicit Mlp(std::vector<std::size_t> widths, Activation hidden = Activation::kRelu,
               double leaky_slope = 0.2);

  // Weights ~ U(-limit, limit) with limit = sqrt(6 / fan_in) for hidden layers
  // and sqrt(3 / fan_in) for the output layer; biases zero.
  void InitFanInUniform(Rng& rng);

  std::size_t input_dim() const { return widths_.front(); }
  std::size_t output_dim() const { return widths_.back(); }
  const std::vector<std::size_t>& widths() const { return widths_; }
  std::size_t num_layers() const { return layers_.size(); }
  std::vector<DenseLayer>& layers() { return layers_; }
  const std::vector<DenseLayer>& layers() const { return layers_; }
  Activation activation() const { return activation_; }
  std::size_t ParameterCount() const;
  bool AllFinite() const;

  Eigen::MatrixXd Forward(const Eigen::MatrixXd& x) const;
  Eigen::MatrixXd Forward(const Eigen::MatrixXd& x, Cache& cache) const;
  // Gradients of a loss whose derivative w.r.t. the output logits is
  // d_output. When d_input is non-null it receives the input gradient.
  Gradients Backward(const Cache& cache, const Eigen::MatrixXd& d_output,
                     Eigen::MatrixXd* d_input = nullptr) const;

  nlohmann::json ToJson() const;
  static Mlp FromJson(const nlohmann::json& j);

 private:
  void Activate(Eigen::MatrixXd& z) const;
  void ActivationGrad(const Eigen::MatrixXd& pre, Eigen::MatrixXd& delta) const;

  std::vector<std::size_t> widths_;
  std::vector<DenseLayer> layers_;
  Activation activation_ = Activation::kRelu;
  double leaky_slope_ = 0.2;
};

class Adam {
 public:
  explicit Adam(const Mlp& net, double beta1 = 0.9, double beta2 = 0.999, double epsilon = 1e-8);
  void Step(Mlp& net, const Gradients& grads, double learning_rate);
  std::size_t steps() const { return t_; }

 private:
  double beta1_, beta2_, epsilon_;
  std::size_t t_ = 0;
  Gradients m_, v_;
};

double Sigmoid(double z);

struct TrainingMetadata {
  std::uint64_t seed = 0;
  std::size_t epochs_run = 0;
  double val_macro_f1 = 0.0;
  double val_loss = 0.0;
};

// Binary classifier: Mlp with one output passed through a sigmoid. Inputs are
// min-max scaled encoded vectors.
struct MlpModel {
  Backbone backbone = Backbone::kCustom;
  Mlp net;
  TrainingMetadata meta;

  // Probability in (0, 1); throws InvalidArgument on a width mismatch or a
  // non-finite input.
  double Predict(std::span<const double> x) const;
  // Column-per-sample batch prediction.
  Eigen::VectorXd PredictBatch(const Eigen::MatrixXd& x) const;

  nlohmann::json ToJson() const;
  static MlpModel FromJson(const nlohmann::json& j);
  void Save(const std::filesystem::path& path) const;
  static MlpModel Load(const std::filesystem::path& path);
};

// Layers per backbone table; weights fan-in uniform, biases zero.
MlpModel MlpInit(Backbone backbone, std::size_t input_dim, std::uint64_t seed,
                 std::vector<std::size_t> custom_hidden = {});

// Samples as columns plus labels.
struct LabeledMatrix {
  Eigen::MatrixXd x;  // d x n
  std::vector<int> y;

  std::size_t size() const { return y.size(); }
  LabeledMatrix Columns(std::span<const std::size_t> idx) const;
};

LabeledMatrix MakeLabeledMatrix(const Dataset& dataset, const ScalerParams& scaler);

// Mean clipped BCE of the batch; fills grads when non-null. The derivative
// through the clip is zero for clipped probabilities.
double BceLoss(const Mlp& net, const Eigen::MatrixXd& x, std::span<const int> y,
               Gradients* grads);

// One Adam step on the mean BCE of the batch. Returns the pre-step loss.
// Throws NumericalError naming the layer if a gradient is not finite.
double BceGradStep(MlpModel& model, const Eigen::MatrixXd& x, std::span<const int> y, Adam& adam,
                   double learning_rate);

struct TrainConfig {
  double learning_rate = 1e-4;
  std::size_t max_epochs = 1000;
  std::size_t early_stop_patience = 20;
  std::size_t batch_size = 64;
  std::size_t k_folds = 8;
  std::uint64_t seed = 0;

  void Validate() const;
  nlohmann::json ToJson() const;
  static TrainConfig FromJson(const nlohmann::json& j);
};

struct FoldResult {
  MlpModel model;
  double val_macro_f1 = 0.0;
  double val_loss = 0.0;
  std::size_t epochs_run = 0;
  std::size_t best_epoch = 0;
  std::size_t fold_index = 0;
  std::vector<std::size_t> val_rows;  // rows of the k-fold input
  std::vector<double> val_probs;      // best-model probabilities, aligned with val_rows
  std::vector<double> train_loss_history;
  std::vector<double> val_loss_history;
};

// Mini-batch Adam on BCE; stops after early_stop_patience epochs without a
// validation-loss improvement and returns the best-validation-loss parameters.
FoldResult TrainWithEarlyStopping(MlpModel model, const LabeledMatrix& train,
                                  const LabeledMatrix& val, const TrainConfig& config);

// Stratified fold assignment: each class is shuffled and dealt round-robin,
// so per-fold class counts differ by at most one. Returns the validation rows
// of every fold, ascending. Throws if a class has fewer records than folds.
std::vector<std::vector<std::size_t>> StratifiedFolds(std::span<const int> labels,
                                                      std::size_t k, std::uint64_t seed);

// Trains one model per fold (concurrently when OpenMP threads are available);
// results are ordered by fold index.
std::vector<FoldResult> KFoldTrain(const LabeledMatrix& data, Backbone backbone,
                                   const TrainConfig& config);

}  // namespace tabrisk

#endif  // TABRISK_NN_HPP_
