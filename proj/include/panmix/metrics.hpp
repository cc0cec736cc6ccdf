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

#include <algorithm>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <utility>
#include <vector>

#include "panmix/core/types.hpp"

namespace panmix {

// ---------------------------------------------------------------------------
// Panoptic quality

struct ClassPqTally {
  double iou_sum = 0.0;
  std::uint64_t tp = 0;
  std::uint64_t fp = 0;
  std::uint64_t fn = 0;

  bool present() const { return tp + fp + fn > 0; }
  double sq() const { return tp ? iou_sum / static_cast<double>(tp) : 0.0; }
  double rq() const {
    const double d = static_cast<double>(tp) + 0.5 * static_cast<double>(fp + fn);
    return d > 0 ? static_cast<double>(tp) / d : 0.0;
  }
  double pq() const { return sq() * rq(); }
};

// Per-class tallies; mergeable across images with +=.
struct PqStats {
  std::vector<ClassPqTally> per_class;

  PqStats() = default;
  explicit PqStats(std::size_t classes) : per_class(classes) {}

  PqStats& operator+=(const PqStats& o) {
    if (per_class.empty()) per_class.resize(o.per_class.size());
    detail::require(per_class.size() == o.per_class.size(), "PqStats: class counts differ");
    for (std::size_t c = 0; c < per_class.size(); ++c) {
      per_class[c].iou_sum += o.per_class[c].iou_sum;
      per_class[c].tp += o.per_class[c].tp;
      per_class[c].fp += o.per_class[c].fp;
      per_class[c].fn += o.per_class[c].fn;
    }
    return *this;
  }

  // Unweighted means over classes present in gt or pred; 0 when none is.
  double mean_sq() const { return mean([](const ClassPqTally& t) { return t.sq(); }); }
  double mean_rq() const { return mean([](const ClassPqTally& t) { return t.rq(); }); }
  double mean_pq() const { return mean([](const ClassPqTally& t) { return t.pq(); }); }

 private:
  template <class F>
  double mean(F f) const {
    double s = 0.0;
    int n = 0;
    for (const auto& t : per_class)
      if (t.present()) {
        s += f(t);
        ++n;
      }
    return n ? s / n : 0.0;
  }
};

namespace detail {

struct SegmentMap {
  std::vector<int> seg;            // per pixel, -1 when unassigned
  std::vector<ClassId> seg_class;  // per segment
};

// One segment per stuff class present plus one per instance record.
inline SegmentMap segments_of(const PanopticLabel& label, const ClassCatalog& catalog) {
  const auto& sem = label.semantic;
  SegmentMap m;
  m.seg.assign(sem.pixels(), -1);
  std::vector<int> stuff_seg(catalog.size(), -1);
  for (std::size_t i = 0; i < sem.pixels(); ++i) {
    const ClassId c = sem[i];
    if (c == kIgnore || !catalog.is_stuff(c)) continue;
    if (stuff_seg[c] < 0) {
      stuff_seg[c] = static_cast<int>(m.seg_class.size());
      m.seg_class.push_back(c);
    }
    m.seg[i] = stuff_seg[c];
  }
  for (const auto& r : label.instances.records) {
    const int s = static_cast<int>(m.seg_class.size());
    m.seg_class.push_back(r.class_id);
    for (std::size_t i = 0; i < sem.pixels(); ++i)
      if (r.mask.test(i)) m.seg[i] = s;
  }
  return m;
}

}  // namespace detail

// Segments of equal class match iff IoU > 0.5 (unique by construction).
// Pixels that are IGNORE in the ground truth are removed from every segment.
inline PqStats panoptic_quality(const PanopticLabel& gt, const PanopticLabel& pred,
                                const ClassCatalog& catalog) {
  const auto& gs = gt.semantic;
  if (gs.height != pred.semantic.height || gs.width != pred.semantic.width)
    throw ValidationError("panoptic_quality: dimensions differ");
  for (ClassId v : pred.semantic.values)
    if (v != kIgnore && !catalog.contains(v))
      throw ValidationError("panoptic_quality: prediction uses a class outside the catalog");
  for (ClassId v : gs.values)
    if (v != kIgnore && !catalog.contains(v))
      throw ValidationError("panoptic_quality: ground truth uses a class outside the catalog");

  const auto g = detail::segments_of(gt, catalog);
  const auto p = detail::segments_of(pred, catalog);
  std::vector<std::uint64_t> g_area(g.seg_class.size(), 0), p_area(p.seg_class.size(), 0);
  std::map<std::pair<int, int>, std::uint64_t> inter;
  for (std::size_t i = 0; i < gs.pixels(); ++i) {
    if (gs[i] == kIgnore) continue;
    const int a = g.seg[i], b = p.seg[i];
    if (a >= 0) ++g_area[a];
    if (b >= 0) ++p_area[b];
    if (a >= 0 && b >= 0) ++inter[{a, b}];
  }

  PqStats stats(catalog.size());
  std::vector<bool> g_matched(g_area.size(), false), p_matched(p_area.size(), false);
  for (const auto& [key, n] : inter) {
    const auto [a, b] = key;
    if (g.seg_class[a] != p.seg_class[b]) continue;
    const double iou = static_cast<double>(n) /
                       static_cast<double>(g_area[a] + p_area[b] - n);
    if (iou <= 0.5) continue;
    g_matched[a] = p_matched[b] = true;
    auto& t = stats.per_class[g.seg_class[a]];
    ++t.tp;
    t.iou_sum += iou;
  }
  for (std::size_t a = 0; a < g_area.size(); ++a)
    if (g_area[a] > 0 && !g_matched[a]) ++stats.per_class[g.seg_class[a]].fn;
  for (std::size_t b = 0; b < p_area.size(); ++b)
    if (p_area[b] > 0 && !p_matched[b]) ++stats.per_class[p.seg_class[b]].fp;
  return stats;
}

// ---------------------------------------------------------------------------
// Semantic mIoU

struct IouStats {
  std::vector<std::uint64_t> intersection, gt_count, pred_count;

  IouStats() = default;
  explicit IouStats(std::size_t classes)
      : intersection(classes, 0), gt_count(classes, 0), pred_count(classes, 0) {}

  IouStats& operator+=(const IouStats& o) {
    if (intersection.empty()) *this = IouStats(o.intersection.size());
    detail::require(intersection.size() == o.intersection.size(),
                    "IouStats: class counts differ");
    for (std::size_t c = 0; c < intersection.size(); ++c) {
      intersection[c] += o.intersection[c];
      gt_count[c] += o.gt_count[c];
      pred_count[c] += o.pred_count[c];
    }
    return *this;
  }

  std::optional<double> iou(std::size_t c) const {
    const auto uni = gt_count[c] + pred_count[c] - intersection[c];
    if (uni == 0) return std::nullopt;
    return static_cast<double>(intersection[c]) / static_cast<double>(uni);
  }

  // Mean over classes present in gt or pred.
  double mean_iou() const {
    double s = 0.0;
    int n = 0;
    for (std::size_t c = 0; c < intersection.size(); ++c)
      if (auto v = iou(c)) {
        s += *v;
        ++n;
      }
    return n ? s / n : 0.0;
  }
};

// Pixels that are IGNORE in the ground truth are not counted.
inline IouStats mean_iou(const LabelMap2D& gt, const LabelMap2D& pred,
                         const ClassCatalog& catalog) {
  if (gt.height != pred.height || gt.width != pred.width)
    throw ValidationError("mean_iou: dimensions differ");
  IouStats s(catalog.size());
  for (std::size_t i = 0; i < gt.pixels(); ++i) {
    const ClassId g = gt[i], p = pred[i];
    if (g == kIgnore || g >= catalog.size()) continue;
    ++s.gt_count[g];
    if (p != kIgnore && p < catalog.size()) {
      ++s.pred_count[p];
      if (p == g) ++s.intersection[g];
    }
  }
  return s;
}

// ---------------------------------------------------------------------------
// Instance average precision

class ApConfig {
 public:
  ApConfig() {
    for (int k = 0; k < 10; ++k) thresholds_.push_back(0.50 + 0.05 * k);
  }
  explicit ApConfig(std::vector<double> thresholds) : thresholds_(std::move(thresholds)) {
    detail::require(!thresholds_.empty(), "ApConfig: no thresholds");
    for (std::size_t i = 0; i < thresholds_.size(); ++i) {
      detail::require(thresholds_[i] > 0.0 && thresholds_[i] <= 1.0,
                      "ApConfig: threshold outside (0,1]");
      detail::require(i == 0 || thresholds_[i] > thresholds_[i - 1],
                      "ApConfig: thresholds must increase strictly");
    }
  }
  const std::vector<double>& thresholds() const { return thresholds_; }

 private:
  std::vector<double> thresholds_;
};

inline double mask_iou(const BinaryMask& a, const BinaryMask& b) {
  std::size_t inter = 0, uni = 0;
  for (std::size_t i = 0; i < a.bits.size(); ++i) {
    inter += (a.bits[i] & b.bits[i]);
    uni += (a.bits[i] | b.bits[i]);
  }
  return uni ? static_cast<double>(inter) / static_cast<double>(uni) : 0.0;
}

// Area under the 101-point interpolated precision/recall curve of detections
// already sorted by descending score.
inline double interpolated_ap(const std::vector<bool>& is_tp, std::uint64_t num_gt) {
  if (num_gt == 0) return 0.0;
  const std::size_t n = is_tp.size();
  std::vector<double> precision(n), recall(n);
  std::uint64_t tp = 0;
  for (std::size_t i = 0; i < n; ++i) {
    tp += is_tp[i] ? 1 : 0;
    precision[i] = static_cast<double>(tp) / static_cast<double>(i + 1);
    recall[i] = static_cast<double>(tp) / static_cast<double>(num_gt);
  }
  for (std::size_t i = n; i-- > 1;) precision[i - 1] = std::max(precision[i - 1], precision[i]);
  double sum = 0.0;
  for (int k = 0; k <= 100; ++k) {
    const double r = k / 100.0;
    const auto it = std::lower_bound(recall.begin(), recall.end(), r);
    if (it != recall.end()) sum += precision[static_cast<std::size_t>(it - recall.begin())];
  }
  return sum / 101.0;
}

struct ApResult {
  // [class][threshold]; empty row for classes without ground truth.
  std::vector<std::vector<double>> per_class_threshold;
  std::vector<std::optional<double>> per_class;  // mean over thresholds
  double map = 0.0;                              // mean over classes with ground truth
};

// Accumulates greedy matches over images; evaluate() sorts detections of all
// images jointly by score.
class ApAccumulator {
 public:
  ApAccumulator(const ClassCatalog& catalog, ApConfig cfg = {})
      : catalog_(catalog), cfg_(std::move(cfg)),
        dets_(catalog.size(), std::vector<std::vector<Det>>(cfg_.thresholds().size())),
        num_gt_(catalog.size(), 0) {}

  void add_image(const InstanceSet& gt, const InstanceSet& preds) {
    const auto& thr = cfg_.thresholds();
    for (ClassId c : catalog_.thing_classes()) {
      std::vector<const InstanceRecord*> g, p;
      for (const auto& r : gt.records)
        if (r.class_id == c) g.push_back(&r);
      for (const auto& r : preds.records)
        if (r.class_id == c) p.push_back(&r);
      num_gt_[c] += g.size();
      std::stable_sort(p.begin(), p.end(), [](const auto* a, const auto* b) {
        if (a->score != b->score) return a->score > b->score;
        return a->id < b->id;
      });
      std::vector<std::vector<double>> iou(p.size(), std::vector<double>(g.size()));
      for (std::size_t i = 0; i < p.size(); ++i)
        for (std::size_t j = 0; j < g.size(); ++j) iou[i][j] = mask_iou(p[i]->mask, g[j]->mask);
      for (std::size_t t = 0; t < thr.size(); ++t) {
        std::vector<bool> taken(g.size(), false);
        for (std::size_t i = 0; i < p.size(); ++i) {
          // highest IoU at or above the threshold, ties to the earlier record
          int best = -1;
          double best_iou = -1.0;
          for (std::size_t j = 0; j < g.size(); ++j)
            if (!taken[j] && iou[i][j] >= thr[t] && iou[i][j] > best_iou) {
              best_iou = iou[i][j];
              best = static_cast<int>(j);
            }
          if (best >= 0) taken[static_cast<std::size_t>(best)] = true;
          dets_[c][t].push_back({p[i]->score, best >= 0, seq_++});
        }
      }
    }
  }

  ApResult evaluate() const {
    ApResult res;
    const std::size_t nt = cfg_.thresholds().size();
    res.per_class_threshold.resize(catalog_.size());
    res.per_class.resize(catalog_.size());
    double sum = 0.0;
    int counted = 0;
    for (ClassId c : catalog_.thing_classes()) {
      if (num_gt_[c] == 0) continue;
      double cls_sum = 0.0;
      for (std::size_t t = 0; t < nt; ++t) {
        auto d = dets_[c][t];
        std::stable_sort(d.begin(), d.end(), [](const Det& a, const Det& b) {
          if (a.score != b.score) return a.score > b.score;
          return a.seq < b.seq;
        });
        std::vector<bool> tp(d.size());
        for (std::size_t i = 0; i < d.size(); ++i) tp[i] = d[i].tp;
        const double ap = interpolated_ap(tp, num_gt_[c]);
        res.per_class_threshold[c].push_back(ap);
        cls_sum += ap;
      }
      res.per_class[c] = cls_sum / static_cast<double>(nt);
      sum += *res.per_class[c];
      ++counted;
    }
    res.map = counted ? sum / counted : 0.0;
    return res;
  }

 private:
  struct Det {
    double score;
    bool tp;
    std::uint64_t seq;
  };
  ClassCatalog catalog_;
  ApConfig cfg_;
  std::vector<std::vector<std::vector<Det>>> dets_;  // [class][threshold]
  std::vector<std::uint64_t> num_gt_;
  std::uint64_t seq_ = 0;
};

inline ApResult average_precision(const InstanceSet& gt, const InstanceSet& preds,
                                  const ClassCatalog& catalog, const ApConfig& cfg = {}) {
  ApAccumulator acc(catalog, cfg);
  acc.add_image(gt, preds);
  return acc.evaluate();
}

}  // namespace panmix
