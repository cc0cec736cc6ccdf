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

// Per-pixel linear classifier used as student and teacher in the lab.

#pragma once

#include <cmath>
#include <vector>

#include "panmix/core/rng.hpp"
#include "panmix/core/types.hpp"
#include "panmix/losses.hpp"

namespace panmix::synthlab {

// RGB, 3x3 local mean RGB, normalized (row, col), bias.
inline constexpr int kFeatureDims = 9;

inline FeatureMap pixel_features(const ImageRGB& img) {
  const int h = img.height, w = img.width;
  FeatureMap f(h, w, kFeatureDims);
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < w; ++c) {
      const std::size_t i = static_cast<std::size_t>(r) * w + c;
      double* x = f.row(i);
      for (int ch = 0; ch < 3; ++ch) x[ch] = img.px(i)[ch] / 255.0;
      double sum[3] = {0, 0, 0};
      int n = 0;
      for (int dr = -1; dr <= 1; ++dr)
        for (int dc = -1; dc <= 1; ++dc) {
          const int rr = r + dr, cc = c + dc;
          if (rr < 0 || rr >= h || cc < 0 || cc >= w) continue;
          const auto* p = img.px(static_cast<std::size_t>(rr) * w + cc);
          for (int ch = 0; ch < 3; ++ch) sum[ch] += p[ch];
          ++n;
        }
      for (int ch = 0; ch < 3; ++ch) x[3 + ch] = sum[ch] / (255.0 * n);
      x[6] = h > 1 ? static_cast<double>(r) / (h - 1) : 0.0;
      x[7] = w > 1 ? static_cast<double>(c) / (w - 1) : 0.0;
      x[8] = 1.0;
    }
  return f;
}

// logits = V (U x) + b. The product is still a linear map of the features;
// the factorization exposes the D-dimensional embedding U x to the CLIP-style
// alignment loss.
struct ToyModel {
  int classes = 0;
  int dims = 0;
  ParamVector params;  // U (dims x F), V (classes x dims), b (classes)

  ToyModel() = default;
  ToyModel(int c, int d) : classes(c), dims(d) {
    panmix::detail::require(c >= 2 && d >= 1, "ToyModel: need >= 2 classes and >= 1 dim");
    params.values.assign(size(), 0.0);
  }

  std::size_t u_size() const { return static_cast<std::size_t>(dims) * kFeatureDims; }
  std::size_t v_size() const { return static_cast<std::size_t>(classes) * dims; }
  std::size_t size() const { return u_size() + v_size() + static_cast<std::size_t>(classes); }

  const double* U() const { return params.values.data(); }
  const double* V() const { return params.values.data() + u_size(); }
  const double* b() const { return params.values.data() + u_size() + v_size(); }

  void init_random(SeededRng& rng, double scale) {
    for (auto& v : params.values) v = scale * rng.normal();
    for (int c = 0; c < classes; ++c) params.values[u_size() + v_size() + c] = 0.0;
  }
};

struct Forward {
  FeatureMap embedding;  // H x W x dims
  LogitVolume logits;
  ProbVolume probs;
};

inline Forward forward(const ToyModel& m, const FeatureMap& x) {
  panmix::detail::require(x.channels == kFeatureDims, "forward: wrong feature dimension");
  Forward out{FeatureMap(x.height, x.width, m.dims), LogitVolume(x.height, x.width, m.classes),
              ProbVolume(x.height, x.width, m.classes)};
  const double* U = m.U();
  const double* V = m.V();
  const double* b = m.b();
  for (std::size_t i = 0; i < x.pixels(); ++i) {
    const double* xi = x.row(i);
    double* e = out.embedding.row(i);
    for (int d = 0; d < m.dims; ++d) {
      double s = 0.0;
      for (int f = 0; f < kFeatureDims; ++f) s += U[d * kFeatureDims + f] * xi[f];
      e[d] = s;
    }
    double* z = out.logits.row(i);
    for (int c = 0; c < m.classes; ++c) {
      double s = b[c];
      for (int d = 0; d < m.dims; ++d) s += V[c * m.dims + d] * e[d];
      z[c] = s;
    }
    panmix::detail::softmax_row(z, m.classes, out.probs.row(i));
  }
  return out;
}

// Accumulates parameter gradients given dL/dlogits and an extra dL/dembedding
// (either may be empty).
inline void backward(const ToyModel& m, const FeatureMap& x, const Forward& fw,
                     const std::vector<double>& grad_logits,
                     const std::vector<double>& grad_embedding, std::vector<double>& grad) {
  const double* V = m.V();
  double* gU = grad.data();
  double* gV = grad.data() + m.u_size();
  double* gb = grad.data() + m.u_size() + m.v_size();
  std::vector<double> ge(static_cast<std::size_t>(m.dims));
  for (std::size_t i = 0; i < x.pixels(); ++i) {
    std::fill(ge.begin(), ge.end(), 0.0);
    bool any = false;
    if (!grad_logits.empty()) {
      const double* gz = grad_logits.data() + i * m.classes;
      const double* e = fw.embedding.row(i);
      for (int c = 0; c < m.classes; ++c) {
        if (gz[c] == 0.0) continue;
        any = true;
        gb[c] += gz[c];
        for (int d = 0; d < m.dims; ++d) {
          gV[c * m.dims + d] += gz[c] * e[d];
          ge[d] += gz[c] * V[c * m.dims + d];
        }
      }
    }
    if (!grad_embedding.empty()) {
      const double* g = grad_embedding.data() + i * m.dims;
      for (int d = 0; d < m.dims; ++d) {
        ge[d] += g[d];
        any |= g[d] != 0.0;
      }
    }
    if (!any) continue;
    const double* xi = x.row(i);
    for (int d = 0; d < m.dims; ++d)
      for (int f = 0; f < kFeatureDims; ++f) gU[d * kFeatureDims + f] += ge[d] * xi[f];
  }
}

// Connected components (4-neighbourhood) of pixels whose argmax is the same
// thing class. Components smaller than `min_area` are discarded; the score is
// the mean probability of the component's class over its pixels.
inline InstanceSet instancer(const ProbVolume& probs, const ClassCatalog& catalog,
                             int min_area = 3) {
  const int h = probs.height, w = probs.width;
  const std::size_t n = probs.pixels();
  std::vector<int> cls(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double* p = probs.row(i);
    int best = 0;
    for (int c = 1; c < probs.channels; ++c)
      if (p[c] > p[best]) best = c;
    cls[i] = catalog.is_thing(static_cast<ClassId>(best)) ? best : -1;
  }
  InstanceSet out;
  out.provenance = Provenance::predicted;
  std::vector<std::uint8_t> seen(n, 0);
  std::vector<std::size_t> stack, comp;
  InstanceId next = 1;
  for (std::size_t s = 0; s < n; ++s) {
    if (cls[s] < 0 || seen[s]) continue;
    const int c = cls[s];
    comp.clear();
    stack.assign(1, s);
    seen[s] = 1;
    while (!stack.empty()) {
      const std::size_t i = stack.back();
      stack.pop_back();
      comp.push_back(i);
      const int r = static_cast<int>(i) / w, col = static_cast<int>(i) % w;
      const int nr[4] = {r - 1, r + 1, r, r};
      const int nc[4] = {col, col, col - 1, col + 1};
      for (int k = 0; k < 4; ++k) {
        if (nr[k] < 0 || nr[k] >= h || nc[k] < 0 || nc[k] >= w) continue;
        const std::size_t j = static_cast<std::size_t>(nr[k]) * w + nc[k];
        if (!seen[j] && cls[j] == c) {
          seen[j] = 1;
          stack.push_back(j);
        }
      }
    }
    if (static_cast<int>(comp.size()) < min_area) continue;
    BinaryMask m(h, w);
    double score = 0.0;
    for (std::size_t i : comp) {
      m.set(i);
      score += probs.at(i, c);
    }
    score /= static_cast<double>(comp.size());
    out.records.push_back(make_record(next++, static_cast<ClassId>(c), score, std::move(m)));
  }
  return out;
}

// Instance term of the lab objective on one image: per-record mean CE towards
// the record's class, averaged over records, plus mean background CE
// -log(sum of stuff probabilities) over pixels covered by no record and not
// void. Gradient is wrt the logits.
inline LossOutput instance_ce(const ProbVolume& probs, const InstanceSet& supervision,
                              const BinaryMask& void_mask, const ClassCatalog& catalog) {
  const std::size_t n = probs.pixels();
  const int C = probs.channels;
  LossOutput out;
  out.grad.assign(probs.data.size(), 0.0);
  std::vector<std::uint8_t> covered(n, 0);
  const auto R = supervision.records.size();
  for (const auto& r : supervision.records) {
    const std::size_t area = r.mask.count();
    if (area == 0) continue;
    const double scale = 1.0 / (static_cast<double>(area) * static_cast<double>(R));
    for (std::size_t i = 0; i < n; ++i) {
      if (!r.mask.test(i)) continue;
      covered[i] = 1;
      const double* p = probs.row(i);
      out.value -= scale * panmix::detail::clamped_log(p[r.class_id]);
      double* g = out.grad.data() + probs.index(i, 0);
      for (int c = 0; c < C; ++c) g[c] += scale * (p[c] - (c == r.class_id ? 1.0 : 0.0));
    }
  }
  std::size_t bg = 0;
  for (std::size_t i = 0; i < n; ++i) bg += !covered[i] && !(void_mask.pixels() && void_mask.test(i));
  if (bg == 0) return out;
  const double scale = 1.0 / static_cast<double>(bg);
  for (std::size_t i = 0; i < n; ++i) {
    if (covered[i] || (void_mask.pixels() && void_mask.test(i))) continue;
    const double* p = probs.row(i);
    double stuff = 0.0;
    for (int c = 0; c < C; ++c)
      if (catalog.is_stuff(static_cast<ClassId>(c))) stuff += p[c];
    out.value -= scale * panmix::detail::clamped_log(stuff);
    const double s = std::max(stuff, kProbClamp);
    double* g = out.grad.data() + probs.index(i, 0);
    for (int c = 0; c < C; ++c)
      g[c] = scale * (p[c] - (catalog.is_stuff(static_cast<ClassId>(c)) ? p[c] / s : 0.0));
  }
  return out;
}

}  // namespace panmix::synthlab
