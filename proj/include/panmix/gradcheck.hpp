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


// Randomized gradient-check problems for every loss, plus a central
// difference runner. Each problem carries the scalar function, the point, and
// the analytic gradient at that point.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "panmix/core/rng.hpp"
#include "panmix/losses.hpp"
#include "panmix/mixing.hpp"

namespace panmix::gradcheck {

struct Problem {
  std::function<double(const std::vector<double>&)> f;
  std::vector<double> x;
  std::vector<double> analytic;
};

namespace detail {

inline double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

inline std::vector<double> normals(std::size_t n, SeededRng& rng, double scale) {
  std::vector<double> v(n);
  for (auto& x : v) x = scale * rng.normal();
  return v;
}

// Labels with roughly 20% IGNORE and at least one scored pixel.
inline LabelMap2D scored_labels(int h, int w, int c, SeededRng& rng) {
  LabelMap2D l(h, w);
  for (auto& v : l.values)
    v = rng.uniform() < 0.2 ? kIgnore : static_cast<ClassId>(rng.below(c));
  l[rng.below(l.pixels())] = static_cast<ClassId>(rng.below(c));
  return l;
}

inline BinaryMask coin_mask(int h, int w, SeededRng& rng) {
  BinaryMask m(h, w);
  for (std::size_t i = 0; i < m.pixels(); ++i) m.set(i, rng.uniform() < 0.5);
  return m;
}

// Offsets kept away from the L1 kink so the difference quotient is smooth.
inline double away_from(double target, SeededRng& rng) {
  const double d = rng.uniform(0.01, 1.0);
  return target + (rng.uniform() < 0.5 ? -d : d);
}

template <class Tag>
Problem volume_problem(const Volume<Tag>& v,
                       std::function<LossOutput(const Volume<Tag>&)> loss) {
  Problem p;
  p.x = v.data;
  p.analytic = loss(v).grad;
  p.f = [v, loss](const std::vector<double>& x) {
    Volume<Tag> u = v;
    u.data = x;
    return loss(u).value;
  };
  return p;
}

}  // namespace detail

inline Problem semantic_ce_problem(SeededRng& rng) {
  const int h = rng.range(1, 4), w = rng.range(1, 4), c = rng.range(2, 6);
  LogitVolume z(h, w, c);
  z.data = detail::normals(z.data.size(), rng, 2.0);
  const auto y = detail::scored_labels(h, w, c, rng);
  return detail::volume_problem<LogitTag>(z, [y](const LogitVolume& v) { return semantic_ce(v, y); });
}

inline Problem mixed_semantic_ce_problem(SeededRng& rng) {
  const int h = rng.range(1, 4), w = rng.range(1, 4), c = rng.range(2, 6);
  LogitVolume z(h, w, c);
  z.data = detail::normals(z.data.size(), rng, 2.0);
  MixedSample m;
  m.semantic = detail::scored_labels(h, w, c, rng);
  for (std::size_t i = 0; i < m.semantic.pixels(); ++i) {
    m.origin.push_back(rng.uniform() < 0.5 ? Origin::source : Origin::target);
    m.pixel_confidence.push_back(rng.uniform());
  }
  return detail::volume_problem<LogitTag>(
      z, [m](const LogitVolume& v) { return mixed_semantic_ce(v, m); });
}

inline Problem cda_loss_problem(SeededRng& rng) {
  const int h = rng.range(1, 4), w = rng.range(1, 4), c = rng.range(2, 6);
  LogitVolume s(h, w, c);
  s.data = detail::normals(s.data.size(), rng, 1.0);
  const auto y = detail::scored_labels(h, w, c, rng);
  return detail::volume_problem<LogitTag>(s, [y](const LogitVolume& v) { return cda_loss(v, y); });
}

// Point: pre-sigmoid objectness scores, then 4 offsets per anchor.
inline Problem rpn_loss_problem(SeededRng& rng) {
  const std::size_t n = static_cast<std::size_t>(rng.range(1, 8));
  std::vector<std::uint8_t> obj_gt(n), pos(n);
  std::vector<BoxOffset> gt(n);
  std::vector<double> x(5 * n);
  for (std::size_t a = 0; a < n; ++a) {
    obj_gt[a] = static_cast<std::uint8_t>(rng.below(2));
    pos[a] = obj_gt[a];
    gt[a] = {rng.normal(), rng.normal(), rng.normal(), rng.normal()};
    x[a] = 2.0 * rng.normal();
    x[n + 4 * a + 0] = detail::away_from(gt[a].x, rng);
    x[n + 4 * a + 1] = detail::away_from(gt[a].y, rng);
    x[n + 4 * a + 2] = detail::away_from(gt[a].w, rng);
    x[n + 4 * a + 3] = detail::away_from(gt[a].h, rng);
  }
  const double lambda = rng.uniform(0.5, 2.0);
  const auto eval = [=](const std::vector<double>& v) {
    std::vector<double> p(n);
    std::vector<BoxOffset> b(n);
    for (std::size_t a = 0; a < n; ++a) {
      p[a] = detail::sigmoid(v[a]);
      b[a] = {v[n + 4 * a], v[n + 4 * a + 1], v[n + 4 * a + 2], v[n + 4 * a + 3]};
    }
    return rpn_loss(p, obj_gt, b, gt, pos, lambda);
  };
  const auto out = eval(x);
  Problem p;
  p.x = x;
  p.analytic = out.grad_cls;
  p.analytic.insert(p.analytic.end(), out.grad_box.begin(), out.grad_box.end());
  p.f = [eval](const std::vector<double>& v) { return eval(v).value; };
  return p;
}

// Point: class logits (n x (T+1)), then class-specific offsets (n x T x 4).
inline Problem refinement_loss_problem(SeededRng& rng) {
  const int T = rng.range(1, 4);
  const std::size_t n = static_cast<std::size_t>(rng.range(1, 5));
  const std::size_t k = static_cast<std::size_t>(T) + 1;
  std::vector<int> cls(n);
  std::vector<BoxOffset> gt(n);
  std::vector<double> x(n * k + 4 * n * T);
  for (std::size_t r = 0; r < n; ++r) {
    cls[r] = rng.range(0, T);
    gt[r] = {rng.normal(), rng.normal(), rng.normal(), rng.normal()};
    for (std::size_t c = 0; c < k; ++c) x[r * k + c] = 2.0 * rng.normal();
    for (int t = 0; t < T; ++t) {
      const std::size_t base = n * k + 4 * (r * T + t);
      x[base + 0] = detail::away_from(gt[r].x, rng);
      x[base + 1] = detail::away_from(gt[r].y, rng);
      x[base + 2] = detail::away_from(gt[r].w, rng);
      x[base + 3] = detail::away_from(gt[r].h, rng);
    }
  }
  const double lambda = rng.uniform(0.5, 2.0);
  const auto eval = [=](const std::vector<double>& v) {
    std::vector<double> probs(n * k);
    for (std::size_t r = 0; r < n; ++r) panmix::detail::softmax_row(&v[r * k], static_cast<int>(k), &probs[r * k]);
    std::vector<BoxOffset> b(n * T);
    for (std::size_t j = 0; j < b.size(); ++j) {
      const std::size_t base = n * k + 4 * j;
      b[j] = {v[base], v[base + 1], v[base + 2], v[base + 3]};
    }
    return refinement_loss(probs, cls, b, gt, T, lambda);
  };
  const auto out = eval(x);
  Problem p;
  p.x = x;
  p.analytic = out.grad_cls;
  p.analytic.insert(p.analytic.end(), out.grad_box.begin(), out.grad_box.end());
  p.f = [eval](const std::vector<double>& v) { return eval(v).value; };
  return p;
}

// Point: pre-sigmoid mask scores for every thing class.
inline Problem mask_bce_problem(SeededRng& rng) {
  const int T = rng.range(1, 4), h = rng.range(1, 5), w = rng.range(1, 5);
  const auto gt = detail::coin_mask(h, w, rng);
  const int cls = rng.range(0, T - 1);
  const auto eval = [=](const std::vector<double>& v) {
    std::vector<double> p(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) p[i] = detail::sigmoid(v[i]);
    return mask_bce(p, T, gt, cls);
  };
  Problem p;
  p.x = detail::normals(static_cast<std::size_t>(T) * h * w, rng, 2.0);
  p.analytic = eval(p.x).grad;
  p.f = [eval](const std::vector<double>& v) { return eval(v).value; };
  return p;
}

inline Problem feature_distance_problem(SeededRng& rng) {
  const int h = rng.range(1, 4), w = rng.range(1, 4), d = rng.range(1, 6);
  FeatureMap anchor(h, w, d), model(h, w, d);
  anchor.data = detail::normals(anchor.data.size(), rng, 1.0);
  model.data = detail::normals(model.data.size(), rng, 1.0);
  auto mask = detail::coin_mask(h, w, rng);
  mask.set(rng.below(mask.pixels()));
  return detail::volume_problem<FeatureTag>(model, [anchor, mask](const FeatureMap& m) {
    return feature_distance(anchor, m, mask);
  });
}

struct LossCase {
  std::string name;
  Problem (*make)(SeededRng&);
};

inline std::vector<LossCase> loss_cases() {
  return {{"semantic_ce", semantic_ce_problem},
          {"mixed_semantic_ce", mixed_semantic_ce_problem},
          {"cda_loss", cda_loss_problem},
          {"rpn_loss", rpn_loss_problem},
          {"refinement_loss", refinement_loss_problem},
          {"mask_bce", mask_bce_problem},
          {"feature_distance", feature_distance_problem}};
}

// Central differences, one coordinate at a time.
inline std::vector<double> central_difference(const Problem& p, double step = 1e-5) {
  std::vector<double> x = p.x, g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double keep = x[i];
    x[i] = keep + step;
    const double up = p.f(x);
    x[i] = keep - step;
    const double down = p.f(x);
    x[i] = keep;
    g[i] = (up - down) / (2.0 * step);
  }
  return g;
}

// max |a - n| / max(max |a|, max |n|, 1e-12)
inline double relative_error(const std::vector<double>& a, const std::vector<double>& n) {
  double diff = 0.0, scale = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff = std::max(diff, std::abs(a[i] - n[i]));
    scale = std::max({scale, std::abs(a[i]), std::abs(n[i])});
  }
  return diff / std::max(scale, 1e-12);
}

struct SuiteRow {
  std::string name;
  int trials = 0;
  double max_error = 0.0;
  bool passed = false;
};

// Each loss draws its problems from its own stream of `seed`.
inline std::vector<SuiteRow> run_suite(int trials, std::uint64_t seed, double tolerance = 1e-4) {
  std::vector<SuiteRow> rows;
  const auto cases = loss_cases();
  for (std::size_t k = 0; k < cases.size(); ++k) {
    SeededRng rng(derive_seed(seed, k));
    SuiteRow row{cases[k].name, trials, 0.0, true};
    for (int t = 0; t < trials; ++t) {
      const auto p = cases[k].make(rng);
      row.max_error = std::max(row.max_error, relative_error(p.analytic, central_difference(p)));
    }
    row.passed = row.max_error <= tolerance;
    rows.push_back(row);
  }
  return rows;
}

}  // namespace panmix::gradcheck
