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

#ifndef TABRISK_AUGMENT_HPP_
#define TABRISK_AUGMENT_HPP_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "tabrisk/dataset.hpp"
#include "tabrisk/kernels.hpp"
#include "tabrisk/nn.hpp"
#include "tabrisk/rng.hpp"
#include "tabrisk/scaler.hpp"

namespace tabrisk {

enum class AugmentMethod { kAdasyn, kCtgan };
enum class Restriction { kNone, kNegativeOnly, kBoth };
enum class PostprocessMode { kFloatAllowNegative, kFloatClampNonneg, kRoundInt };

std::string ToString(AugmentMethod m);
std::string ToString(Restriction r);
std::string ToString(PostprocessMode m);
AugmentMethod ParseAugmentMethod(const std::string& s);
Restriction ParseRestriction(const std::string& s);
PostprocessMode ParsePostprocessMode(const std::string& s);

struct AugmentConfig {
  AugmentMethod method = AugmentMethod::kCtgan;
  double size_multiplier = 5.0;
  std::size_t min_per_class = 5000;  // ADASYN loop only
  Restriction restriction = Restriction::kNone;
  double silhouette_min = 0.3;
  PostprocessMode postprocess = PostprocessMode::kFloatAllowNegative;
  std::size_t k_neighbors = 5;
  std::size_t batch_size_generated = 100;
  std::uint64_t seed = 0;
  std::size_t max_iterations = 10000;
  std::size_t max_consecutive_discards = 200;

  void Validate() const;
  nlohmann::json ToJson() const;
  static AugmentConfig FromJson(const nlohmann::json& j);
};

struct GanConfig {
  std::size_t noise_dim = 32;
  std::vector<std::size_t> generator_layers{128, 128};
  std::vector<std::size_t> discriminator_layers{128, 64};
  std::size_t epochs = 300;
  double learning_rate = 2e-4;
  std::size_t batch_size = 64;
  double temperature = 0.2;  // relaxation of the binary and categorical heads
  std::uint64_t seed = 0;

  void Validate() const;
  nlohmann::json ToJson() const;
  static GanConfig FromJson(const nlohmann::json& j);
};

struct PhaseReport {
  std::string name;
  int target_class = 1;
  std::size_t generated = 0;
  std::size_t accepted = 0;
  std::size_t discarded = 0;
};

// One silhouette check. previous is the score of the current dataset and
// score the score with the batch included. Unrestricted batches in a
// restricted run are recorded with restricted = false and always accepted.
struct SilhouetteStep {
  std::size_t iteration = 0;
  std::string phase;
  int target_class = 1;
  std::size_t batch_size = 0;
  bool restricted = true;
  double previous = 0.0;
  double score = 0.0;
  bool accepted = false;
};

struct AugmentReport {
  std::string method;
  std::string restriction;
  std::size_t input_size = 0;
  std::vector<PhaseReport> phases;
  std::size_t final_positive = 0;
  std::size_t final_negative = 0;
  std::size_t iterations = 0;
  std::optional<double> initial_silhouette;
  double silhouette_min = 0.3;
  std::vector<SilhouetteStep> trajectory;

  nlohmann::json ToJson() const;
  static AugmentReport FromJson(const nlohmann::json& j);
};

// Accept when the score improves on the previous one or clears the minimum.
inline bool SilhouetteAccepts(double previous, double score, double silhouette_min) {
  return score > previous || score > silhouette_min;
}

// Re-derives every restricted decision from the trajectory alone, carrying the
// running score forward through accepted steps. Returns false on the first
// step whose recorded decision or previous score disagrees.
bool ReplayTrajectory(const AugmentReport& report);

// Mean silhouette (Euclidean) of a two-class labeling. A point alone in its
// class scores 0. Throws InvalidArgument for fewer than two points or a
// single class.
double SilhouetteScore(const RowMatrix& points, std::span<const int> labels);

// Silhouette under incremental growth: per-point distance sums to each class
// are kept, so scoring a candidate batch of size b costs O(n b) rather than
// O(n^2).
class SilhouetteTracker {
 public:
  struct Candidate {
    RowMatrix points;
    std::vector<int> labels;
    kernels::ClassDistanceSums existing_delta;  // added to the current sums
    kernels::ClassDistanceSums new_sums;        // sums for the batch rows
    double score = 0.0;
  };

  SilhouetteTracker(RowMatrix points, std::vector<int> labels);

  double score() const { return score_; }
  std::size_t size() const { return labels_.size(); }
  Candidate Evaluate(RowMatrix batch, std::vector<int> labels) const;
  void Commit(Candidate candidate);

 private:
  static double ScoreFromSums(const std::vector<double>& to0, const std::vector<double>& to1,
                              std::span<const int> labels);

  RowMatrix points_;
  std::vector<int> labels_;
  std::vector<double> to0_, to1_;
  double score_ = 0.0;
};

struct AdasynSample {
  std::size_t seed;      // dataset row of the minority point
  std::size_t neighbor;  // dataset row of the chosen minority neighbor
  double lambda;
};

struct AdasynOutput {
  std::vector<CaseRecord> records;
  std::vector<AdasynSample> trace;        // aligned with records
  std::vector<std::size_t> minority_rows;
  std::vector<double> density;            // opposite-class fraction per minority row
  std::vector<std::size_t> allocation;    // samples generated per minority row
};

// Density-weighted interpolation between target-class points and their k
// nearest same-class neighbors. Neighbor search runs on min-max scaled
// values; interpolation is in raw units. Binary and one-hot slots take the
// seed's value when lambda <= 0.5 and the neighbor's otherwise.
AdasynOutput AdasynOversample(const Dataset& dataset, int target_class, std::size_t n_new,
                              std::size_t k, std::uint64_t seed);

// Alternates positive oversampling to parity with negative oversampling on
// random subsets until both classes reach
// max(min_per_class, ceil(size_multiplier * |input| / 2)).
std::pair<Dataset, AugmentReport> AdasynBalanceLoop(const Dataset& dataset,
                                                    const AugmentConfig& config);

// Generator (noise + class one-hot -> encoded record) and discriminator
// (encoded record + class one-hot -> logit) trained with the non-saturating
// objective. Numeric slots live in scaled space with a tanh head stretched to
// [-0.2, 1.2]. Binary slots use a sigmoid head and categorical blocks a
// softmax head, both relaxed with logistic/Gumbel noise at the configured
// temperature, so thresholding (argmax) a head samples its distribution.
struct GanModel {
  SchemaPtr schema;
  ScalerParams scaler;
  Mlp generator;
  Mlp discriminator;
  std::size_t noise_dim = 0;
  double temperature = 0.2;
  std::vector<double> d_loss_history;
  std::vector<double> g_loss_history;

  // Generator output in scaled space for column-wise noise and labels. With
  // head_rng the discrete heads draw their relaxation noise from it;
  // otherwise they output the noiseless relaxed values.
  Eigen::MatrixXd Generate(const Eigen::MatrixXd& noise, std::span<const int> labels,
                           Rng* head_rng = nullptr) const;
  // Probability the discriminator assigns to "real" for scaled rows.
  Eigen::VectorXd Discriminate(const Eigen::MatrixXd& scaled, std::span<const int> labels) const;
};

// Throws NumericalError naming the epoch if a loss becomes non-finite.
GanModel GanTrain(const Dataset& dataset, const GanConfig& config);

// n raw-unit records labeled target_class: categorical blocks by argmax,
// binary slots at 0.5, numerics inverse-scaled without clipping.
std::vector<CaseRecord> GanSample(const GanModel& model, int target_class, std::size_t n,
                                  std::uint64_t seed);

// Balanced accuracy of the trained discriminator on held-out real records
// against n_fake generated records per class.
double GanDiscriminatorAccuracy(const GanModel& model, const Dataset& held_out,
                                std::size_t n_fake, std::uint64_t seed);

// float_allow_negative: identity; float_clamp_nonneg: numeric slots to
// max(v, 0); round_int: clamp, then integer-valued numerics rounded half away
// from zero.
std::vector<CaseRecord> PostprocessGenerated(std::vector<CaseRecord> records, PostprocessMode mode,
                                             const FeatureSchema& schema);

// Three generation phases: minority class to parity, negatives until the size
// reaches size_multiplier x input, minority class to parity again. Restricted
// classes accept a batch only when SilhouetteAccepts holds.
std::pair<Dataset, AugmentReport> GanThreePhaseAugment(const Dataset& dataset,
                                                       const AugmentConfig& config,
                                                       const GanConfig& gan_config);

// Same, with an already trained generator.
std::pair<Dataset, AugmentReport> GanThreePhaseAugment(const Dataset& dataset,
                                                       const AugmentConfig& config,
                                                       const GanModel& model);

}  // namespace tabrisk

#endif  // TABRISK_AUGMENT_HPP_
