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

#include "tabrisk/augment.hpp"
#include "tabrisk/errors.hpp"
#include "tabrisk/rng.hpp"

namespace tabrisk {

namespace {

constexpr double kNumericCenter = 0.5;
constexpr double kNumericHalfSpan = 0.7;  // tanh head covers [-0.2, 1.2]

double Softplus(double x) { return std::log1p(std::exp(-std::fabs(x))) + std::max(x, 0.0); }

Eigen::MatrixXd OneHotLabels(std::span<const int> labels) {
  Eigen::MatrixXd c = Eigen::MatrixXd::Zero(2, static_cast<Eigen::Index>(labels.size()));
  for (std::size_t i = 0; i < labels.size(); ++i) c(labels[i] == 1 ? 1 : 0, static_cast<Eigen::Index>(i)) = 1.0;
  return c;
}

Eigen::MatrixXd Stack(const Eigen::MatrixXd& top, const Eigen::MatrixXd& bottom) {
  Eigen::MatrixXd m(top.rows() + bottom.rows(), top.cols());
  m << top, bottom;
  return m;
}

// Relaxation noise for the discrete heads: logistic for binary slots, Gumbel
// for one-hot slots, zero for numerics.
Eigen::MatrixXd HeadNoise(const FeatureSchema& schema, Eigen::Index cols, Rng& rng) {
  Eigen::MatrixXd e = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(schema.width()), cols);
  for (Eigen::Index c = 0; c < cols; ++c) {
    for (std::size_t i = 0; i < schema.num_features(); ++i) {
      const FeatureSpec& f = schema.feature(i);
      const auto off = static_cast<Eigen::Index>(schema.offset(i));
      if (f.kind == FeatureKind::kBinary) {
        const double u = std::clamp(rng.Uniform(), 1e-12, 1.0 - 1e-12);
        e(off, c) = std::log(u) - std::log1p(-u);
      } else if (f.kind == FeatureKind::kCategorical) {
        for (std::size_t s = 0; s < f.width(); ++s) {
          const double u = std::clamp(rng.Uniform(), 1e-12, 1.0 - 1e-12);
          e(off + static_cast<Eigen::Index>(s), c) = -std::log(-std::log(u));
        }
      }
    }
  }
  return e;
}

Eigen::MatrixXd ApplyHeads(const FeatureSchema& schema, const Eigen::MatrixXd& u,
                           const Eigen::MatrixXd* noise, double tau) {
  Eigen::MatrixXd out(u.rows(), u.cols());
  for (std::size_t i = 0; i < schema.num_features(); ++i) {
    const FeatureSpec& f = schema.feature(i);
    const auto off = static_cast<Eigen::Index>(schema.offset(i));
    const auto w = static_cast<Eigen::Index>(f.width());
    switch (f.kind) {
      case FeatureKind::kNumeric:
        out.row(off) = u.row(off).unaryExpr(
            [](double v) { return kNumericCenter + kNumericHalfSpan * std::tanh(v); });
        break;
      case FeatureKind::kBinary:
        for (Eigen::Index c = 0; c < u.cols(); ++c) {
          const double e = noise ? (*noise)(off, c) : 0.0;
          out(off, c) = Sigmoid((u(off, c) + e) / tau);
        }
        break;
      case FeatureKind::kCategorical:
        for (Eigen::Index c = 0; c < u.cols(); ++c) {
          Eigen::VectorXd block = u.col(c).segment(off, w);
          if (noise) block += noise->col(c).segment(off, w);
          block /= tau;
          Eigen::VectorXd e = (block.array() - block.maxCoeff()).exp();
          out.col(c).segment(off, w) = e / e.sum();
        }
        break;
    }
  }
  return out;
}

// Gradient w.r.t. head inputs given the gradient w.r.t. head outputs.
Eigen::MatrixXd HeadBackward(const FeatureSchema& schema, const Eigen::MatrixXd& out,
                             const Eigen::MatrixXd& d_out, double tau) {
  Eigen::MatrixXd d_u(out.rows(), out.cols());
  for (std::size_t i = 0; i < schema.num_features(); ++i) {
    const FeatureSpec& f = schema.feature(i);
    const auto off = static_cast<Eigen::Index>(schema.offset(i));
    const auto w = static_cast<Eigen::Index>(f.width());
    switch (f.kind) {
      case FeatureKind::kNumeric:
        for (Eigen::Index c = 0; c < out.cols(); ++c) {
          const double t = (out(off, c) - kNumericCenter) / kNumericHalfSpan;
          d_u(off, c) = d_out(off, c) * kNumericHalfSpan * (1.0 - t * t);
        }
        break;
      case FeatureKind::kBinary:
        for (Eigen::Index c = 0; c < out.cols(); ++c) {
          const double s = out(off, c);
          d_u(off, c) = d_out(off, c) * s * (1.0 - s) / tau;
        }
        break;
      case FeatureKind::kCategorical:
        for (Eigen::Index c = 0; c < out.cols(); ++c) {
          const auto s = out.col(c).segment(off, w);
          const auto g = d_out.col(c).segment(off, w);
          const double dot = s.dot(g);
          d_u.col(c).segment(off, w) = s.cwiseProduct((g.array() - dot).matrix()) / tau;
        }
        break;
    }
  }
  return d_u;
}

void Accumulate(Gradients& into, const Gradients& g) {
  for (std::size_t l = 0; l < into.weight.size(); ++l) {
    into.weight[l] += g.weight[l];
    into.bias[l] += g.bias[l];
  }
}

Eigen::MatrixXd NormalMatrix(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  Eigen::MatrixXd z(rows, cols);
  for (Eigen::Index c = 0; c < cols; ++c) {
    for (Eigen::Index r = 0; r < rows; ++r) z(r, c) = rng.Normal();
  }
  return z;
}

}  // namespace

Eigen::MatrixXd GanModel::Generate(const Eigen::MatrixXd& noise, std::span<const int> labels,
                                   Rng* head_rng) const {
  const Eigen::MatrixXd u = generator.Forward(Stack(noise, OneHotLabels(labels)));
  if (!head_rng) return ApplyHeads(*schema, u, nullptr, temperature);
  const Eigen::MatrixXd e = HeadNoise(*schema, u.cols(), *head_rng);
  return ApplyHeads(*schema, u, &e, temperature);
}

Eigen::VectorXd GanModel::Discriminate(const Eigen::MatrixXd& scaled, std::span<const int> labels) const {
  const Eigen::MatrixXd logits = discriminator.Forward(Stack(scaled, OneHotLabels(labels)));
  Eigen::VectorXd p(logits.cols());
  for (Eigen::Index i = 0; i < logits.cols(); ++i) p(i) = Sigmoid(logits(0, i));
  return p;
}

GanModel GanTrain(const Dataset& dataset, const GanConfig& config) {
  config.Validate();
  const std::vector<int> labels = dataset.Labels();
  std::vector<std::size_t> rows_by_class[2];
  for (std::size_t r = 0; r < labels.size(); ++r) rows_by_class[labels[r]].push_back(r);
  if (rows_by_class[0].empty() || rows_by_class[1].empty()) {
    throw InvalidArgument("GAN training needs both classes present");
  }

  GanModel model;
  model.schema = dataset.schema_ptr();
  model.scaler = FitMinMax(dataset);
  model.noise_dim = config.noise_dim;
  model.temperature = config.temperature;
  const double tau = config.temperature;
  const FeatureSchema& schema = dataset.schema();
  const std::size_t d = schema.width();
  const Eigen::MatrixXd real = ToRowMatrix(dataset, &model.scaler).transpose();

  std::vector<std::size_t> gw{config.noise_dim + 2};
  gw.insert(gw.end(), config.generator_layers.begin(), config.generator_layers.end());
  gw.push_back(d);
  std::vector<std::size_t> dw{d + 2};
  dw.insert(dw.end(), config.discriminator_layers.begin(), config.discriminator_layers.end());
  dw.push_back(1);
  model.generator = Mlp(gw, Activation::kRelu);
  model.discriminator = Mlp(dw, Activation::kLeakyRelu, 0.2);

  Rng rng(config.seed);
  model.generator.InitFanInUniform(rng);
  model.discriminator.InitFanInUniform(rng);
  Adam adam_g(model.generator, 0.5, 0.999);
  Adam adam_d(model.discriminator, 0.5, 0.999);

  const std::size_t batch = config.batch_size;
  const auto b = static_cast<Eigen::Index>(batch);
  const double inv_b = 1.0 / static_cast<double>(batch);
  const std::size_t steps = (dataset.size() + batch - 1) / batch;

  std::vector<int> cls(batch);
  Eigen::MatrixXd x_real(static_cast<Eigen::Index>(d), b);
  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    double d_sum = 0.0, g_sum = 0.0;
    for (std::size_t step = 0; step < steps; ++step) {
      // Class-balanced real batch so the minority condition is trained as often.
      for (std::size_t i = 0; i < batch; ++i) {
        cls[i] = rng.Bernoulli(0.5) ? 1 : 0;
        const auto& pool = rows_by_class[cls[i]];
        x_real.col(static_cast<Eigen::Index>(i)) = real.col(static_cast<Eigen::Index>(pool[rng.Index(pool.size())]));
      }
      const Eigen::MatrixXd cond = OneHotLabels(cls);

      // Discriminator step.
      const Eigen::MatrixXd u1 =
          model.generator.Forward(Stack(NormalMatrix(static_cast<Eigen::Index>(config.noise_dim), b, rng), cond));
      const Eigen::MatrixXd e1 = HeadNoise(schema, b, rng);
      const Eigen::MatrixXd fake = ApplyHeads(schema, u1, &e1, tau);
      Mlp::Cache cache_r, cache_f;
      const Eigen::MatrixXd lr = model.discriminator.Forward(Stack(x_real, cond), cache_r);
      const Eigen::MatrixXd lf = model.discriminator.Forward(Stack(fake, cond), cache_f);
      Eigen::MatrixXd gr(1, b), gf(1, b);
      double d_loss = 0.0;
      for (Eigen::Index i = 0; i < b; ++i) {
        d_loss += Softplus(-lr(0, i)) + Softplus(lf(0, i));
        gr(0, i) = (Sigmoid(lr(0, i)) - 1.0) * inv_b;
        gf(0, i) = Sigmoid(lf(0, i)) * inv_b;
      }
      d_loss *= inv_b;
      Gradients gd = model.discriminator.Backward(cache_r, gr);
      Accumulate(gd, model.discriminator.Backward(cache_f, gf));
      adam_d.Step(model.discriminator, gd, config.learning_rate);

      // Generator step, non-saturating objective.
      Mlp::Cache cache_g, cache_d;
      const Eigen::MatrixXd u = model.generator.Forward(
          Stack(NormalMatrix(static_cast<Eigen::Index>(config.noise_dim), b, rng), cond), cache_g);
      const Eigen::MatrixXd e2 = HeadNoise(schema, b, rng);
      const Eigen::MatrixXd fake2 = ApplyHeads(schema, u, &e2, tau);
      const Eigen::MatrixXd l2 = model.discriminator.Forward(Stack(fake2, cond), cache_d);
      Eigen::MatrixXd g2(1, b);
      double g_loss = 0.0;
      for (Eigen::Index i = 0; i < b; ++i) {
        g_loss += Softplus(-l2(0, i));
        g2(0, i) = (Sigmoid(l2(0, i)) - 1.0) * inv_b;
      }
      g_loss *= inv_b;
      Eigen::MatrixXd d_input;
      model.discriminator.Backward(cache_d, g2, &d_input);
      const Eigen::MatrixXd d_fake = d_input.topRows(static_cast<Eigen::Index>(d));
      const Gradients gg = model.generator.Backward(cache_g, HeadBackward(schema, fake2, d_fake, tau));
      adam_g.Step(model.generator, gg, config.learning_rate);

      if (!std::isfinite(d_loss) || !std::isfinite(g_loss)) {
        throw NumericalError("GAN loss became non-finite at epoch " + std::to_string(epoch));
      }
      d_sum += d_loss;
      g_sum += g_loss;
    }
    model.d_loss_history.push_back(d_sum / static_cast<double>(steps));
    model.g_loss_history.push_back(g_sum / static_cast<double>(steps));
    if (!model.generator.AllFinite() || !model.discriminator.AllFinite()) {
      throw NumericalError("GAN parameters became non-finite at epoch " + std::to_string(epoch));
    }
  }
  return model;
}

std::vector<CaseRecord> GanSample(const GanModel& model, int target_class, std::size_t n,
                                  std::uint64_t seed) {
  if (target_class != 0 && target_class != 1) throw InvalidArgument("target class must be 0 or 1");
  std::vector<CaseRecord> out;
  if (n == 0) return out;
  if (!model.schema) throw InvalidArgument("GAN model is not trained");
  const FeatureSchema& schema = *model.schema;
  Rng rng(seed);
  const std::vector<int> labels(n, target_class);
  const Eigen::MatrixXd noise =
      NormalMatrix(static_cast<Eigen::Index>(model.noise_dim), static_cast<Eigen::Index>(n), rng);
  const Eigen::MatrixXd scaled = model.Generate(noise, labels, &rng);
  out.reserve(n);
  for (Eigen::Index c = 0; c < scaled.cols(); ++c) {
    const std::vector<double> z(scaled.col(c).data(), scaled.col(c).data() + scaled.rows());
    std::vector<double> raw = model.scaler.Inverse(z);
    for (std::size_t i = 0; i < schema.num_features(); ++i) {
      const FeatureSpec& f = schema.feature(i);
      const std::size_t off = schema.offset(i);
      if (f.kind == FeatureKind::kBinary) {
        raw[off] = raw[off] >= 0.5 ? 1.0 : 0.0;
      } else if (f.kind == FeatureKind::kCategorical) {
        std::size_t best = 0;
        for (std::size_t s = 1; s < f.width(); ++s) {
          if (raw[off + s] > raw[off + best]) best = s;
        }
        for (std::size_t s = 0; s < f.width(); ++s) raw[off + s] = s == best ? 1.0 : 0.0;
      }
    }
    out.push_back(CaseRecord{std::move(raw), target_class});
  }
  return out;
}

double GanDiscriminatorAccuracy(const GanModel& model, const Dataset& held_out,
                                std::size_t n_fake, std::uint64_t seed) {
  if (held_out.empty() || n_fake == 0) throw InvalidArgument("accuracy needs real and generated samples");
  const std::vector<int> labels = held_out.Labels();
  const Eigen::VectorXd p_real =
      model.Discriminate(ToRowMatrix(held_out, &model.scaler).transpose(), labels);
  double real_correct = 0.0;
  for (Eigen::Index i = 0; i < p_real.size(); ++i) real_correct += p_real(i) >= 0.5 ? 1.0 : 0.0;

  Rng rng(seed);
  double fake_correct = 0.0;
  for (int cls : {0, 1}) {
    const std::vector<int> fl(n_fake, cls);
    const Eigen::MatrixXd noise = NormalMatrix(static_cast<Eigen::Index>(model.noise_dim),
                                               static_cast<Eigen::Index>(n_fake), rng);
    const Eigen::VectorXd p_fake = model.Discriminate(model.Generate(noise, fl, &rng), fl);
    for (Eigen::Index i = 0; i < p_fake.size(); ++i) fake_correct += p_fake(i) < 0.5 ? 1.0 : 0.0;
  }
  return 0.5 * (real_correct / static_cast<double>(p_real.size()) +
                fake_correct / static_cast<double>(2 * n_fake));
}

}  // namespace tabrisk
