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

#ifndef TABRISK_TESTS_GRAD_CHECK_HPP_
#define TABRISK_TESTS_GRAD_CHECK_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include <Eigen/Dense>

#include "tabrisk/nn.hpp"
#include "tabrisk/rng.hpp"

namespace tabrisk::oracle {

inline double RelativeError(double a, double b) {
  const double scale = std::max({std::fabs(a), std::fabs(b), 1e-7});
  return std::fabs(a - b) / scale;
}

// Activation pattern of the hidden layers, used to detect a finite
// difference that straddles a ReLU kink (where the loss has no derivative).
inline std::vector<bool> ActivationPattern(const Mlp& net, const Eigen::MatrixXd& x) {
  Mlp::Cache cache;
  net.Forward(x, cache);
  std::vector<bool> pattern;
  for (std::size_t l = 0; l + 1 < cache.pre.size(); ++l) {
    for (Eigen::Index i = 0; i < cache.pre[l].size(); ++i) pattern.push_back(cache.pre[l].data()[i] > 0.0);
  }
  return pattern;
}

struct GradientCheck {
  double max_error = 0.0;
  std::size_t probes = 0;
  std::size_t kinks = 0;  // probes skipped because the stencil crossed a kink
};

// Central differences of the mean BCE against the backprop gradient.
// samples_per_layer == 0 checks every parameter; otherwise that many weight
// entries plus that many bias entries are drawn from each layer.
inline GradientCheck CheckGradient(Mlp& net, const Eigen::MatrixXd& x, const std::vector<int>& y, Rng& rng,
                                   std::size_t samples_per_layer = 0, double h = 1e-5) {
  Gradients g;
  BceLoss(net, x, y, &g);
  GradientCheck out;
  auto probe = [&](double& param, double analytic) {
    const double keep = param;
    param = keep + h;
    const double up = BceLoss(net, x, y, nullptr);
    const std::vector<bool> up_pattern = ActivationPattern(net, x);
    param = keep - h;
    const double down = BceLoss(net, x, y, nullptr);
    const bool kink = ActivationPattern(net, x) != up_pattern;
    param = keep;
    if (kink) {
      ++out.kinks;
      return;
    }
    ++out.probes;
    out.max_error = std::max(out.max_error, RelativeError(analytic, (up - down) / (2 * h)));
  };
  for (std::size_t l = 0; l < net.num_layers(); ++l) {
    Eigen::MatrixXd& w = net.layers()[l].weight;
    Eigen::VectorXd& b = net.layers()[l].bias;
    if (samples_per_layer == 0) {
      for (Eigen::Index i = 0; i < w.size(); ++i) probe(w.data()[i], g.weight[l].data()[i]);
      for (Eigen::Index i = 0; i < b.size(); ++i) probe(b[i], g.bias[l][i]);
      continue;
    }
    for (std::size_t s = 0; s < samples_per_layer; ++s) {
      const auto i = static_cast<Eigen::Index>(rng.Index(static_cast<std::size_t>(w.size())));
      probe(w.data()[i], g.weight[l].data()[i]);
      const auto j = static_cast<Eigen::Index>(rng.Index(static_cast<std::size_t>(b.size())));
      probe(b[j], g.bias[l][j]);
    }
  }
  return out;
}

inline double MaxGradientError(Mlp& net, const Eigen::MatrixXd& x, const std::vector<int>& y, Rng& rng,
                               std::size_t samples_per_layer = 0, double h = 1e-5) {
  return CheckGradient(net, x, y, rng, samples_per_layer, h).max_error;
}

// Random parameters with nonzero biases so every unit is exercised.
inline void RandomizeParameters(Mlp& net, Rng& rng) {
  net.InitFanInUniform(rng);
  for (DenseLayer& layer : net.layers()) {
    for (Eigen::Index i = 0; i < layer.bias.size(); ++i) layer.bias[i] = rng.Uniform(-0.1, 0.1);
  }
}

}  // namespace tabrisk::oracle

#endif  // TABRISK_TESTS_GRAD_CHECK_HPP_
