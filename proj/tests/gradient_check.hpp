// Copyright 2026 The Inoculation Harness Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Finite-difference check of the analytic loss gradient, shared by the model
// tests and the acceptance binary.

#pragma once

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "inoc/model.hpp"
#include "inoc/synthgen.hpp"

namespace inoc_test {

using namespace inoc;

inline ModelParams random_params(const FeatureConfig& f, std::size_t hidden, std::mt19937_64& gen,
                                 double sd = 0.5) {
  ModelParams p = ModelParams::init(f, hidden, gen());
  std::normal_distribution<double> n(0.0, sd);
  for (double& w : p.weights) w = n(gen);
  for (double& w : p.bias) w = n(gen);
  for (double& w : p.out_weights) w = n(gen);
  for (double& w : p.out_bias) w = n(gen);
  return p;
}

inline std::vector<LabeledVector> random_batch(const FeatureConfig& f, std::size_t n, std::uint64_t seed) {
  SynthConfig c;
  c.counts = {n, 0, 0};
  c.seed = seed;
  std::vector<LabeledVector> batch;
  for (const Example& e : gen_original(c).train.examples) batch.push_back({featurize(e, f), e.label});
  return batch;
}

// Central finite differences on the regularized mean loss.
struct Coordinate {
  std::vector<double> ModelParams::*field;
  std::size_t index;
};

inline double analytic(const ModelParams& p, const Gradient& g, const Coordinate& c) {
  if (c.field == &ModelParams::weights) {
    const auto feature = static_cast<std::uint32_t>(c.index / p.width());
    return g.weight(p, feature, c.index % p.width());
  }
  if (c.field == &ModelParams::bias) return g.bias[c.index];
  if (c.field == &ModelParams::out_weights) return g.out_weight(p, c.index);
  return g.out_bias[c.index];
}

inline double max_relative_error(std::size_t hidden, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  const FeatureConfig f = [] {
    FeatureConfig c;
    c.hash_dim = 97;
    return c;
  }();
  // Hidden units get small weights: saturated tanh units have gradients near
  // 1e-9, below what a 1e-5 central difference resolves.
  const ModelParams p = random_params(f, hidden, gen, hidden ? 0.1 : 0.5);
  const auto batch = random_batch(f, 1 + gen() % 8, gen());
  const double l2 = (gen() % 2) ? 1e-2 : 0.0;
  const LossAndGradient lg = loss_and_grad(p, batch, l2);

  std::vector<Coordinate> pool;
  for (std::size_t i = 0; i < p.weights.size(); ++i) pool.push_back({&ModelParams::weights, i});
  for (std::size_t i = 0; i < p.bias.size(); ++i) pool.push_back({&ModelParams::bias, i});
  for (std::size_t i = 0; i < p.out_weights.size(); ++i) {
    pool.push_back({&ModelParams::out_weights, i});
  }
  for (std::size_t i = 0; i < p.out_bias.size(); ++i) pool.push_back({&ModelParams::out_bias, i});

  double worst = 0.0;
  const double h = 1e-5;
  for (int k = 0; k < 10; ++k) {
    const Coordinate c = pool[gen() % pool.size()];
    ModelParams plus = p, minus = p;
    (plus.*c.field)[c.index] += h;
    (minus.*c.field)[c.index] -= h;
    const double numeric =
        (loss_and_grad(plus, batch, l2).loss - loss_and_grad(minus, batch, l2).loss) / (2 * h);
    const double a = analytic(p, lg.grad, c);
    const double scale = std::max({std::fabs(a), std::fabs(numeric), 1e-7});
    worst = std::max(worst, std::fabs(a - numeric) / scale);
  }
  return worst;
}

}  // namespace inoc_test
