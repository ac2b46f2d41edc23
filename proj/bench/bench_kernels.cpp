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

// Serial reference against OpenMP kernels on benchmark-sized inputs.
// Thread count follows OMP_NUM_THREADS.

#include <numeric>
#include <vector>

#include <benchmark/benchmark.h>

#include "tabrisk/kernels.hpp"
#include "tabrisk/nn.hpp"
#include "tabrisk/rng.hpp"
#include "tabrisk/schema.hpp"

namespace {

using namespace tabrisk;

constexpr std::size_t kDim = 34;

RowMatrix RandomRows(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  RowMatrix m(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(kDim));
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.Uniform();
  return m;
}

std::vector<int> RandomLabels(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<int> y(n);
  for (int& v : y) v = rng.Bernoulli(0.5) ? 1 : 0;
  return y;
}

EnsembleModel Ensemble() {
  std::vector<FeatureSpec> f;
  for (std::size_t i = 0; i < kDim; ++i) f.push_back(FeatureSpec::Numeric("x" + std::to_string(i), 0, 1, false));
  EnsembleModel e;
  e.schema = std::make_shared<const FeatureSchema>(std::move(f), "y");
  e.scaler.min.assign(kDim, 0.0);
  e.scaler.max.assign(kDim, 1.0);
  for (std::uint64_t s = 0; s < 8; ++s) {
    e.members.push_back(MlpInit(Backbone::kV5, kDim, s));
    e.alphas.push_back(0.8);
  }
  return e;
}

// Scoring a 100-row candidate batch against the current dataset.
template <auto Fn>
void DistanceSums(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const RowMatrix points = RandomRows(n, 1);
  const std::vector<int> labels = RandomLabels(n, 2);
  const RowMatrix batch = RandomRows(100, 3);
  for (auto _ : state) benchmark::DoNotOptimize(Fn(batch, points, labels));
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * n * 100));
}

template <auto Fn>
void KNearest(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const RowMatrix points = RandomRows(n, 4);
  std::vector<std::size_t> all(n);
  std::iota(all.begin(), all.end(), 0);
  const std::vector<std::size_t> queries(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(n / 10));
  for (auto _ : state) benchmark::DoNotOptimize(Fn(points, queries, all, 5));
}

template <auto Fn>
void Predict(benchmark::State& state) {
  const EnsembleModel model = Ensemble();
  const RowMatrix raw = RandomRows(static_cast<std::size_t>(state.range(0)), 5);
  for (auto _ : state) benchmark::DoNotOptimize(Fn(model, raw));
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * state.range(0)));
}

BENCHMARK(DistanceSums<kernels::serial::DistanceSumsByClass>)->Name("DistanceSums/serial")->Arg(1500)->Arg(12000);
BENCHMARK(DistanceSums<kernels::omp::DistanceSumsByClass>)->Name("DistanceSums/omp")->Arg(1500)->Arg(12000);
BENCHMARK(KNearest<kernels::serial::KNearest>)->Name("KNearest/serial")->Arg(1500)->Arg(5000);
BENCHMARK(KNearest<kernels::omp::KNearest>)->Name("KNearest/omp")->Arg(1500)->Arg(5000);
BENCHMARK(Predict<kernels::serial::PredictProba>)->Name("PredictProba/serial")->Arg(1000);
BENCHMARK(Predict<kernels::omp::PredictProba>)->Name("PredictProba/omp")->Arg(1000);

}  // namespace

BENCHMARK_MAIN();
