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

#include "tabrisk/ensemble.hpp"

#include <cmath>
#include <fstream>

#include "tabrisk/errors.hpp"

namespace tabrisk {

VotingWeights AssignVotingWeights(std::span<const double> val_f1s, double gate) {
  if (val_f1s.empty()) throw InvalidArgument("voting needs at least one member");
  VotingWeights w;
  bool any = false;
  for (double f1 : val_f1s) {
    if (!(f1 >= 0.0 && f1 <= 1.0)) throw InvalidArgument("validation F1 must lie in [0, 1]");
    const double a = f1 > gate ? f1 : 0.0;
    any = any || a > 0.0;
    w.alphas.push_back(a);
  }
  if (!any) {
    w.alphas.assign(val_f1s.size(), 1.0 / static_cast<double>(val_f1s.size()));
    w.fallback = true;
  }
  return w;
}

void EnsembleModel::Validate() const {
  if (!schema) throw InvalidArgument("ensemble has no schema");
  if (members.empty()) throw InvalidArgument("ensemble has no members");
  if (members.size() != alphas.size()) throw InvalidArgument("member and weight counts differ");
  if (scaler.width() != schema->width()) throw InvalidArgument("scaler width does not match schema");
  double total = 0.0;
  for (double a : alphas) {
    if (!(a >= 0.0) || !std::isfinite(a)) throw InvalidArgument("voting weights must be finite and >= 0");
    total += a;
  }
  if (!(total > 0.0)) throw InvalidArgument("at least one voting weight must be positive");
  for (const MlpModel& m : members) {
    if (m.net.input_dim() != schema->width()) throw InvalidArgument("member input width does not match schema");
  }
}

std::vector<double> EnsembleModel::MemberProbabilities(std::span<const double> raw) const {
  if (raw.size() != scaler.width()) {
    throw InvalidArgument("input width " + std::to_string(raw.size()) + " does not match schema width " +
                          std::to_string(scaler.width()));
  }
  const std::vector<double> z = scaler.Transform(raw);
  std::vector<double> p;
  p.reserve(members.size());
  for (const MlpModel& m : members) p.push_back(m.Predict(z));
  return p;
}

double EnsembleModel::PredictProba(std::span<const double> raw) const {
  const std::vector<double> p = MemberProbabilities(raw);
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    num += alphas[i] * p[i];
    den += alphas[i];
  }
  return num / den;
}

std::vector<double> EnsembleModel::PredictProbaBatch(const RowMatrix& raw) const {
  if (raw.cols() != static_cast<Eigen::Index>(scaler.width())) {
    throw InvalidArgument("input width " + std::to_string(raw.cols()) + " does not match schema width " +
                          std::to_string(scaler.width()));
  }
  if (!raw.allFinite()) throw InvalidArgument("input contains a non-finite value");
  Eigen::MatrixXd z(raw.cols(), raw.rows());
  for (Eigen::Index s = 0; s < raw.cols(); ++s) {
    const double lo = scaler.min[static_cast<std::size_t>(s)];
    const double range = scaler.max[static_cast<std::size_t>(s)] - lo;
    for (Eigen::Index r = 0; r < raw.rows(); ++r) z(s, r) = range > 0.0 ? (raw(r, s) - lo) / range : 0.0;
  }
  Eigen::VectorXd num = Eigen::VectorXd::Zero(raw.rows());
  double den = 0.0;
  for (std::size_t i = 0; i < members.size(); ++i) {
    if (alphas[i] == 0.0) continue;
    num += alphas[i] * members[i].PredictBatch(z);
    den += alphas[i];
  }
  std::vector<double> p(static_cast<std::size_t>(raw.rows()));
  for (Eigen::Index r = 0; r < raw.rows(); ++r) p[static_cast<std::size_t>(r)] = num(r) / den;
  return p;
}

nlohmann::json EnsembleModel::ToJson() const {
  nlohmann::json m = nlohmann::json::array();
  for (const MlpModel& member : members) m.push_back(member.ToJson());
  return {{"format", "tabrisk-ensemble/1"},
          {"schema", schema->ToJson()},
          {"scaler", scaler.ToJson()},
          {"alphas", alphas},
          {"fallback", fallback},
          {"threshold", threshold},
          {"gate", gate},
          {"training", training_info},
          {"members", m}};
}

EnsembleModel EnsembleModel::FromJson(const nlohmann::json& j) {
  EnsembleModel e;
  try {
    e.schema = std::make_shared<const FeatureSchema>(FeatureSchema::FromJson(j.at("schema")));
    e.scaler = ScalerParams::FromJson(j.at("scaler"));
    e.alphas = j.at("alphas").get<std::vector<double>>();
    e.fallback = j.value("fallback", false);
    e.threshold = j.value("threshold", 0.5);
    e.gate = j.value("gate", 0.7);
    e.training_info = j.value("training", nlohmann::json::object());
    for (const auto& m : j.at("members")) e.members.push_back(MlpModel::FromJson(m));
  } catch (const nlohmann::json::exception& ex) {
    throw InvalidArgument(std::string("malformed ensemble document: ") + ex.what());
  }
  e.Validate();
  return e;
}

void EnsembleModel::Save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << ToJson().dump() << '\n';
}

EnsembleModel EnsembleModel::Load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open ensemble file " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& ex) {
    throw InvalidArgument("ensemble file " + path.string() + " is not valid JSON: " + ex.what());
  }
  return FromJson(j);
}

EnsembleModel BuildEnsemble(std::vector<FoldResult> folds, ScalerParams scaler, SchemaPtr schema,
                            double gate, double threshold) {
  std::vector<double> f1s;
  for (const FoldResult& f : folds) f1s.push_back(f.val_macro_f1);
  const VotingWeights w = AssignVotingWeights(f1s, gate);
  EnsembleModel e;
  for (FoldResult& f : folds) e.members.push_back(std::move(f.model));
  e.alphas = w.alphas;
  e.fallback = w.fallback;
  e.scaler = std::move(scaler);
  e.schema = std::move(schema);
  e.gate = gate;
  e.threshold = threshold;
  e.training_info = {{"val_macro_f1", f1s}};
  e.Validate();
  return e;
}

}  // namespace tabrisk
