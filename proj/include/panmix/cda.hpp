// Copyright 2026 The panmix Authors. All Rights Reserved.
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

#pragma once

#include <cmath>
#include <vector>

#include "panmix/core/rng.hpp"
#include "panmix/core/types.hpp"
#include "panmix/losses.hpp"

namespace panmix {

// C x D matrix of class anchors.
struct ClassEmbeddingMatrix {
  int classes = 0;
  int dims = 0;
  std::vector<double> data;
  bool normalized = false;

  const double* row(int c) const { return data.data() + static_cast<std::size_t>(c) * dims; }
  double* row(int c) { return data.data() + static_cast<std::size_t>(c) * dims; }
};

// Mean-pools each class's prompt embeddings; optionally rescales rows to unit
// L2 norm after pooling.
inline ClassEmbeddingMatrix class_mean_embeddings(const PromptEmbeddingBank& bank,
                                                  bool normalize = true) {
  detail::require(bank.classes >= 1 && bank.prompts >= 1 && bank.dims >= 1,
                  "class_mean_embeddings: empty bank");
  detail::require(bank.data.size() ==
                      static_cast<std::size_t>(bank.classes) * bank.prompts * bank.dims,
                  "class_mean_embeddings: bank size mismatch");
  ClassEmbeddingMatrix m;
  m.classes = static_cast<int>(bank.classes);
  m.dims = static_cast<int>(bank.dims);
  m.data.assign(static_cast<std::size_t>(m.classes) * m.dims, 0.0);
  for (int c = 0; c < m.classes; ++c) {
    double* r = m.row(c);
    for (std::uint32_t p = 0; p < bank.prompts; ++p)
      for (int d = 0; d < m.dims; ++d) r[d] += bank.at(c, p, d);
    for (int d = 0; d < m.dims; ++d) r[d] /= bank.prompts;
    if (!normalize) continue;
    double sq = 0.0;
    for (int d = 0; d < m.dims; ++d) sq += r[d] * r[d];
    if (sq == 0.0)
      throw ValidationError("class_mean_embeddings: zero-norm class row " +
                            std::to_string(c));
    const double inv = 1.0 / std::sqrt(sq);
    for (int d = 0; d < m.dims; ++d) r[d] *= inv;
  }
  m.normalized = normalize;
  return m;
}

// sigma[h,w,c] = <f(h,w), anchor_c>, with f optionally L2-normalized first.
// Zero-norm feature vectors stay zero under normalization.
inline LogitVolume similarity_map(const FeatureMap& features,
                                  const ClassEmbeddingMatrix& anchors,
                                  bool normalize_features = true) {
  if (features.channels != anchors.dims)
    throw ValidationError("similarity_map: feature dim " + std::to_string(features.channels) +
                          " != anchor dim " + std::to_string(anchors.dims));
  LogitVolume sim(features.height, features.width, anchors.classes);
  const int D = anchors.dims;
  for (std::size_t i = 0; i < features.pixels(); ++i) {
    const double* f = features.row(i);
    double scale = 1.0;
    if (normalize_features) {
      double sq = 0.0;
      for (int d = 0; d < D; ++d) sq += f[d] * f[d];
      scale = sq > 0.0 ? 1.0 / std::sqrt(sq) : 0.0;
    }
    for (int c = 0; c < anchors.classes; ++c) {
      const double* a = anchors.row(c);
      double dot = 0.0;
      for (int d = 0; d < D; ++d) dot += f[d] * a[d];
      sim.at(i, c) = scale * dot;
    }
  }
  return sim;
}

// Chains a gradient wrt similarity logits back to the features.
inline std::vector<double> similarity_backward(const FeatureMap& features,
                                               const ClassEmbeddingMatrix& anchors,
                                               const std::vector<double>& grad_sim,
                                               bool normalize_features = true) {
  const int D = anchors.dims, C = anchors.classes;
  std::vector<double> grad(features.data.size(), 0.0);
  std::vector<double> g_dir(static_cast<std::size_t>(D));
  for (std::size_t i = 0; i < features.pixels(); ++i) {
    const double* f = features.row(i);
    const double* gs = grad_sim.data() + i * static_cast<std::size_t>(C);
    std::fill(g_dir.begin(), g_dir.end(), 0.0);
    for (int c = 0; c < C; ++c) {
      const double* a = anchors.row(c);
      for (int d = 0; d < D; ++d) g_dir[d] += gs[c] * a[d];
    }
    double* g = grad.data() + features.index(i, 0);
    if (!normalize_features) {
      for (int d = 0; d < D; ++d) g[d] = g_dir[d];
      continue;
    }
    double sq = 0.0;
    for (int d = 0; d < D; ++d) sq += f[d] * f[d];
    if (sq == 0.0) continue;
    const double inv = 1.0 / std::sqrt(sq);
    // d(f/|f|)/df = (I - u u^T) / |f|
    double proj = 0.0;
    for (int d = 0; d < D; ++d) proj += g_dir[d] * f[d] * inv;
    for (int d = 0; d < D; ++d) g[d] = inv * (g_dir[d] - proj * f[d] * inv);
  }
  return grad;
}

// Deterministic stand-in for text embeddings: P noisy prompts around C
// mutually orthonormal directions in D >= C dimensions.
inline PromptEmbeddingBank synthetic_embedding_bank(std::uint32_t classes,
                                                    std::uint32_t prompts,
                                                    std::uint32_t dims,
                                                    std::uint64_t seed,
                                                    double prompt_noise = 0.05) {
  detail::require(dims >= classes && classes >= 1 && prompts >= 1,
                  "synthetic_embedding_bank: need dims >= classes");
  SeededRng rng(seed);
  std::vector<std::vector<double>> basis;
  while (basis.size() < classes) {
    std::vector<double> v(dims);
    for (auto& x : v) x = rng.normal();
    for (const auto& b : basis) {  // Gram-Schmidt
      double dot = 0.0;
      for (std::uint32_t d = 0; d < dims; ++d) dot += v[d] * b[d];
      for (std::uint32_t d = 0; d < dims; ++d) v[d] -= dot * b[d];
    }
    double sq = 0.0;
    for (double x : v) sq += x * x;
    if (sq < 1e-8) continue;
    for (auto& x : v) x /= std::sqrt(sq);
    basis.push_back(std::move(v));
  }
  PromptEmbeddingBank bank{classes, prompts, dims, {}};
  bank.data.reserve(static_cast<std::size_t>(classes) * prompts * dims);
  for (std::uint32_t c = 0; c < classes; ++c)
    for (std::uint32_t p = 0; p < prompts; ++p)
      for (std::uint32_t d = 0; d < dims; ++d)
        bank.data.push_back(static_cast<float>(basis[c][d] + prompt_noise * rng.normal()));
  return bank;
}

}  // namespace panmix
