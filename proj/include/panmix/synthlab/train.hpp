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

// Mean-teacher training loop of the lab.

#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "panmix/cda.hpp"
#include "panmix/fusion.hpp"
#include "panmix/losses.hpp"
#include "panmix/metrics.hpp"
#include "panmix/mixing.hpp"
#include "panmix/pseudo.hpp"
#include "panmix/synthlab/model.hpp"
#include "panmix/synthlab/scene.hpp"

namespace panmix::synthlab {

struct TrainConfig {
  std::uint64_t seed = 1;
  int iterations = 1500;
  double learning_rate = 0.2;
  double ema_alpha = 0.999;
  double tau = 0.75;
  bool imix = true;
  double imix_start_fraction = 0.8;
  MixDirection direction = MixDirection::target_to_source;
  bool cda = false;
  double cda_weight = 0.05;
  double pseudo_confidence = kDefaultPseudoConfidence;
  double occlusion_eps = kDefaultOcclusionEps;
  int eval_every = 250;  // 0: evaluate only at the end
  int source_pool = 64;
  int target_pool = 64;
  int eval_images = 24;
  int embed_dims = 8;
  double init_scale = 0.3;
  int min_component_area = 3;
  double fusion_floor = 0.5;
  DomainSpec source = default_source_spec();
  PhotometricShift target_shift{45.0, 0.25, {200.0, 200.0, 200.0}, 6.0};

  DomainSpec target_spec() const {
    DomainSpec t = source;
    t.shift = target_shift;
    return t;
  }

  void validate() const {
    panmix::detail::require(iterations >= 0, "TrainConfig: negative iterations");
    panmix::detail::require(learning_rate > 0.0 && std::isfinite(learning_rate),
                    "TrainConfig: learning_rate must be positive");
    panmix::detail::require(ema_alpha >= 0.0 && ema_alpha <= 1.0, "TrainConfig: ema_alpha outside [0,1]");
    panmix::detail::require(tau >= 0.0 && tau <= 1.0, "TrainConfig: tau outside [0,1]");
    panmix::detail::require(imix_start_fraction >= 0.0 && imix_start_fraction <= 1.0,
                    "TrainConfig: imix_start_fraction outside [0,1]");
    panmix::detail::require(cda_weight >= 0.0, "TrainConfig: negative cda_weight");
    panmix::detail::require(pseudo_confidence >= 0.0 && pseudo_confidence <= 1.0,
                    "TrainConfig: pseudo_confidence outside [0,1]");
    panmix::detail::require(occlusion_eps >= 0.0 && occlusion_eps <= 1.0,
                    "TrainConfig: occlusion_eps outside [0,1]");
    panmix::detail::require(eval_every >= 0, "TrainConfig: negative eval_every");
    panmix::detail::require(source_pool >= 1 && target_pool >= 1 && eval_images >= 1,
                    "TrainConfig: pools must be non-empty");
    panmix::detail::require(embed_dims >= static_cast<int>(source.catalog.size()),
                    "TrainConfig: embed_dims must be >= number of classes");
    panmix::detail::require(min_component_area >= 1, "TrainConfig: min_component_area must be >= 1");
    panmix::detail::require(fusion_floor >= 0.0 && fusion_floor <= 1.0,
                    "TrainConfig: fusion_floor outside [0,1]");
    source.validate();
    target_spec().validate();
  }
};

// teacher' = alpha * teacher + (1 - alpha) * student, elementwise.
inline ParamVector ema_update(const ParamVector& teacher, const ParamVector& student,
                              double alpha) {
  if (teacher.values.size() != student.values.size())
    throw ValidationError("ema_update: teacher has " + std::to_string(teacher.values.size()) +
                          " parameters, student has " + std::to_string(student.values.size()));
  panmix::detail::require(alpha >= 0.0 && alpha <= 1.0, "ema_update: alpha outside [0,1]");
  ParamVector out;
  out.values.resize(teacher.values.size());
  for (std::size_t i = 0; i < out.values.size(); ++i)
    out.values[i] = alpha * teacher.values[i] + (1.0 - alpha) * student.values[i];
  return out;
}

struct Metrics {
  double msq = 0.0, mrq = 0.0, mpq = 0.0, miou = 0.0, map = 0.0;
  bool operator==(const Metrics&) const = default;
};

struct TraceEntry {
  int iteration = 0;
  double mean_loss = 0.0;  // since the previous entry
  Metrics metrics;
  double teacher_gap = 0.0;  // max |teacher - student|
  bool operator==(const TraceEntry&) const = default;
};

struct TrainResult {
  ToyModel student, teacher;
  std::vector<double> losses;  // per iteration
  std::vector<TraceEntry> trace;
  int imix_steps = 0;  // iterations whose IMix term was applied
};

struct LabeledImage {
  ImageRGB image;
  PanopticLabel label;
  FeatureMap features;
};

inline LabeledImage make_labeled(Scene s) {
  LabeledImage out{std::move(s.image), std::move(s.label), {}};
  out.features = pixel_features(out.image);
  return out;
}

// Pools drawn from disjoint scene streams of one seed.
struct DataPools {
  std::vector<LabeledImage> source, target, eval;
};

inline DataPools make_pools(const TrainConfig& cfg) {
  DataPools p;
  const auto tspec = cfg.target_spec();
  const std::uint64_t src_seed = derive_seed(cfg.seed, 1);
  const std::uint64_t tgt_seed = derive_seed(cfg.seed, 2);
  const std::uint64_t eval_seed = derive_seed(cfg.seed, 3);
  for (int i = 0; i < cfg.source_pool; ++i)
    p.source.push_back(make_labeled(generate_scene_at(cfg.source, src_seed, i)));
  for (int i = 0; i < cfg.target_pool; ++i)
    p.target.push_back(make_labeled(generate_scene_at(tspec, tgt_seed, i)));
  for (int i = 0; i < cfg.eval_images; ++i)
    p.eval.push_back(make_labeled(generate_scene_at(tspec, eval_seed, i)));
  return p;
}

struct Prediction {
  PanopticLabel panoptic;
  InstanceSet instances;  // unfiltered instancer output, for AP
};

inline Prediction predict(const ToyModel& m, const FeatureMap& x, const ClassCatalog& cat,
                          int min_area, double fusion_floor) {
  const auto fw = forward(m, x);
  Prediction p;
  p.instances = instancer(fw.probs, cat, min_area);
  p.panoptic = merge(fw.probs, p.instances, cat, FusionConfig(fusion_floor));
  return p;
}

inline Metrics evaluate(const ToyModel& m, const std::vector<LabeledImage>& images,
                        const ClassCatalog& cat, int min_area, double fusion_floor) {
  PqStats pq(cat.size());
  IouStats iou(cat.size());
  ApAccumulator ap(cat);
  for (const auto& img : images) {
    const auto p = predict(m, img.features, cat, min_area, fusion_floor);
    pq += panoptic_quality(img.label, p.panoptic, cat);
    iou += mean_iou(img.label.semantic, p.panoptic.semantic, cat);
    ap.add_image(img.label.instances, p.instances);
  }
  return {pq.mean_sq(), pq.mean_rq(), pq.mean_pq(), iou.mean_iou(), ap.evaluate().map};
}

namespace detail {

inline void check_finite(double v, int iteration, const char* term) {
  if (!std::isfinite(v))
    throw DivergenceError("train: non-finite " + std::string(term) + " loss at iteration " +
                          std::to_string(iteration));
}

inline void add_into(std::vector<double>& dst, const std::vector<double>& src, double w = 1.0) {
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += w * src[i];
}

inline double max_abs_diff(const ParamVector& a, const ParamVector& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.values.size(); ++i)
    m = std::max(m, std::abs(a.values[i] - b.values[i]));
  return m;
}

}  // namespace detail

// Runs the adaptation loop. Each iteration draws one source and one target
// scene and descends on
//   source CE + source instance CE [+ CDA]            (supervised)
//   ClassMix CE with teacher pseudo-labels [+ CDA]    (self-supervised)
//   IMix instance CE                                  (after the warm-up)
// then moves the teacher towards the student. The IMix term is skipped when
// the filtered teacher set is empty.
inline TrainResult train(const TrainConfig& cfg, const DataPools& pools) {
  cfg.validate();
  const auto& cat = cfg.source.catalog;
  const int C = static_cast<int>(cat.size());
  SeededRng rng(derive_seed(cfg.seed, 0));

  TrainResult res;
  res.student = ToyModel(C, cfg.embed_dims);
  res.student.init_random(rng, cfg.init_scale);
  res.teacher = res.student;

  const auto anchors = class_mean_embeddings(synthetic_embedding_bank(
      static_cast<std::uint32_t>(C), 4, static_cast<std::uint32_t>(cfg.embed_dims),
      derive_seed(cfg.seed, 4)));
  const int imix_start = static_cast<int>(std::ceil(cfg.imix_start_fraction * cfg.iterations));
  const FilterConfig filter(cfg.tau);

  std::vector<double> grad(res.student.size());
  double loss_since = 0.0;
  int since = 0;
  for (int it = 0; it < cfg.iterations; ++it) {
    const auto& src = pools.source[rng.below(pools.source.size())];
    const auto& tgt = pools.target[rng.below(pools.target.size())];
    std::fill(grad.begin(), grad.end(), 0.0);
    double loss = 0.0;

    // supervised source terms
    const auto fs = forward(res.student, src.features);
    auto ce = semantic_ce(fs.probs, src.label.semantic);
    detail::check_finite(ce.value, it, "source semantic");
    auto inst = instance_ce(fs.probs, src.label.instances, BinaryMask{}, cat);
    detail::check_finite(inst.value, it, "source instance");
    loss += ce.value + inst.value;
    detail::add_into(ce.grad, inst.grad);
    std::vector<double> g_emb;
    if (cfg.cda) {
      const auto sim = similarity_map(fs.embedding, anchors);
      const auto cl = cda_loss(sim, src.label.semantic);
      detail::check_finite(cl.value, it, "source CDA");
      loss += cfg.cda_weight * cl.value;
      g_emb = similarity_backward(fs.embedding, anchors, cl.grad);
      for (auto& v : g_emb) v *= cfg.cda_weight;
    }
    backward(res.student, src.features, fs, ce.grad, g_emb, grad);

    // ClassMix with teacher pseudo-labels
    const auto ft = forward(res.teacher, tgt.features);
    const auto pseudo = semantic_argmax(ft.probs, cfg.pseudo_confidence);
    const auto mask = classmix_select(src.label.semantic, rng);
    const auto weights = pseudo.weights();
    const auto mixed = dacs_compose(src.image, src.label.semantic, tgt.image, pseudo.labels,
                                    weights, mask);
    const auto xm = pixel_features(mixed.image);
    const auto fm = forward(res.student, xm);
    const auto mce = mixed_semantic_ce(fm.probs, mixed);
    detail::check_finite(mce.value, it, "mixed semantic");
    loss += mce.value;
    g_emb.clear();
    if (cfg.cda) {
      const auto sim = similarity_map(fm.embedding, anchors);
      const auto cl = cda_loss(sim, mixed.semantic);
      detail::check_finite(cl.value, it, "mixed CDA");
      loss += cfg.cda_weight * cl.value;
      g_emb = similarity_backward(fm.embedding, anchors, cl.grad);
      for (auto& v : g_emb) v *= cfg.cda_weight;
    }
    backward(res.student, xm, fm, mce.grad, g_emb, grad);

    // IMix
    if (cfg.imix && it >= imix_start) {
      const auto preds = instancer(ft.probs, cat, cfg.min_component_area);
      const auto kept = filter_instances(preds, filter, tgt.image.height, tgt.image.width);
      if (!kept.kept.empty()) {
        const auto sample = imix_compose(tgt.image, kept.kept, src.image, src.label,
                                         cfg.direction, cfg.occlusion_eps);
        const auto xi = pixel_features(sample.image);
        const auto fi = forward(res.student, xi);
        const auto il = instance_ce(fi.probs, sample.instance_supervision,
                                    sample.instance_void, cat);
        detail::check_finite(il.value, it, "IMix instance");
        loss += il.value;
        backward(res.student, xi, fi, il.grad, {}, grad);
        ++res.imix_steps;
      }
    }

    detail::check_finite(loss, it, "total");
    for (double g : grad) detail::check_finite(g, it, "gradient of the total");
    for (std::size_t k = 0; k < grad.size(); ++k)
      res.student.params.values[k] -= cfg.learning_rate * grad[k];
    res.teacher.params = ema_update(res.teacher.params, res.student.params, cfg.ema_alpha);
    res.losses.push_back(loss);
    loss_since += loss;
    ++since;

    const bool last = it + 1 == cfg.iterations;
    if (last || (cfg.eval_every > 0 && (it + 1) % cfg.eval_every == 0)) {
      TraceEntry e;
      e.iteration = it + 1;
      e.mean_loss = loss_since / since;
      e.metrics = evaluate(res.student, pools.eval, cat, cfg.min_component_area,
                           cfg.fusion_floor);
      e.teacher_gap = detail::max_abs_diff(res.teacher.params, res.student.params);
      res.trace.push_back(e);
      loss_since = 0.0;
      since = 0;
    }
  }
  return res;
}

inline TrainResult train(const TrainConfig& cfg) { return train(cfg, make_pools(cfg)); }

}  // namespace panmix::synthlab
