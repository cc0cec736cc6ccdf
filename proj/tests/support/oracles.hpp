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

// Slow reference implementations. They share no code with the library beyond
// the plain data types, and favour obviousness over speed.

#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "panmix/core/types.hpp"

namespace panmix::testing {

using PixelSet = std::set<std::size_t>;

inline PixelSet pixels_of(const BinaryMask& m) {
  PixelSet s;
  for (std::size_t i = 0; i < m.pixels(); ++i)
    if (m.test(i)) s.insert(i);
  return s;
}

inline std::size_t intersection_size(const PixelSet& a, const PixelSet& b) {
  std::size_t n = 0;
  for (auto i : a) n += b.count(i);
  return n;
}

// ---------------------------------------------------------------------------
// Panoptic quality

struct OracleSegment {
  ClassId cls;
  PixelSet pixels;
};

// Segments with gt-IGNORE pixels removed. Stuff: one per class; things: one
// per record.
inline std::vector<OracleSegment> oracle_segments(const PanopticLabel& L, const LabelMap2D& gt_sem,
                                                  const ClassCatalog& cat) {
  std::map<ClassId, PixelSet> stuff;
  PixelSet in_instance;
  for (const auto& r : L.instances.records)
    for (auto i : pixels_of(r.mask)) in_instance.insert(i);
  for (std::size_t i = 0; i < L.semantic.pixels(); ++i) {
    const ClassId c = L.semantic[i];
    if (gt_sem[i] == kIgnore || c == kIgnore || cat.is_thing(c) || in_instance.count(i)) continue;
    stuff[c].insert(i);
  }
  std::vector<OracleSegment> out;
  for (auto& [c, px] : stuff) out.push_back({c, px});
  for (const auto& r : L.instances.records) {
    PixelSet px;
    for (auto i : pixels_of(r.mask))
      if (gt_sem[i] != kIgnore) px.insert(i);
    out.push_back({r.class_id, px});
  }
  return out;
}

struct OracleTally {
  double iou_sum = 0.0;
  std::uint64_t tp = 0, fp = 0, fn = 0;
};

// Tries every injective gt->pred assignment within each class and keeps the
// one with the most IoU > 0.5 pairs (then the largest IoU sum).
inline std::vector<OracleTally> brute_force_pq(const PanopticLabel& gt, const PanopticLabel& pred,
                                               const ClassCatalog& cat) {
  auto gs = oracle_segments(gt, gt.semantic, cat);
  auto ps = oracle_segments(pred, gt.semantic, cat);
  std::erase_if(gs, [](const OracleSegment& s) { return s.pixels.empty(); });
  std::erase_if(ps, [](const OracleSegment& s) { return s.pixels.empty(); });
  std::vector<OracleTally> out(cat.size());
  for (ClassId c = 0; c < cat.size(); ++c) {
    std::vector<const PixelSet*> g, p;
    for (const auto& s : gs)
      if (s.cls == c) g.push_back(&s.pixels);
    for (const auto& s : ps)
      if (s.cls == c) p.push_back(&s.pixels);
    if (g.empty() && p.empty()) continue;
    // pad predictions with "unmatched" slots so every permutation is legal
    std::vector<int> slots(std::max(g.size(), p.size()) + g.size());
    for (std::size_t k = 0; k < slots.size(); ++k)
      slots[k] = k < p.size() ? static_cast<int>(k) : -1;
    std::sort(slots.begin(), slots.end());
    std::uint64_t best_tp = 0;
    double best_sum = 0.0;
    do {
      std::uint64_t tp = 0;
      double sum = 0.0;
      for (std::size_t a = 0; a < g.size(); ++a) {
        if (slots[a] < 0) continue;
        const auto& P = *p[static_cast<std::size_t>(slots[a])];
        const double inter = static_cast<double>(intersection_size(*g[a], P));
        const double iou = inter / (static_cast<double>(g[a]->size() + P.size()) - inter);
        if (iou > 0.5) {
          ++tp;
          sum += iou;
        }
      }
      if (tp > best_tp || (tp == best_tp && sum > best_sum)) {
        best_tp = tp;
        best_sum = sum;
      }
    } while (std::next_permutation(slots.begin(), slots.end()));
    out[c].tp = best_tp;
    out[c].iou_sum = best_sum;
    out[c].fn = g.size() - best_tp;
    out[c].fp = p.size() - best_tp;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Semantic IoU by explicit pixel sets.

inline std::vector<std::optional<double>> set_iou(const LabelMap2D& gt, const LabelMap2D& pred,
                                                  std::size_t classes) {
  std::vector<std::optional<double>> out(classes);
  for (std::size_t c = 0; c < classes; ++c) {
    PixelSet G, P;
    for (std::size_t i = 0; i < gt.pixels(); ++i) {
      if (gt[i] == kIgnore) continue;
      if (gt[i] == c) G.insert(i);
      if (pred[i] == c) P.insert(i);
    }
    PixelSet U = G;
    U.insert(P.begin(), P.end());
    if (U.empty()) continue;
    out[c] = static_cast<double>(intersection_size(G, P)) / static_cast<double>(U.size());
  }
  return out;
}

// ---------------------------------------------------------------------------
// Average precision for one class and one threshold: greedy matching in
// score order, then precision is evaluated at every cut-off of the ranked
// list and interpolated as max precision over recall >= r.

inline double brute_force_ap(const std::vector<BinaryMask>& gt,
                             std::vector<std::pair<double, BinaryMask>> preds, double thr) {
  if (gt.empty()) return 0.0;
  std::stable_sort(preds.begin(), preds.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  std::vector<bool> used(gt.size(), false), hit(preds.size(), false);
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const auto P = pixels_of(preds[i].second);
    double best = -1.0;
    int arg = -1;
    for (std::size_t j = 0; j < gt.size(); ++j) {
      if (used[j]) continue;
      const auto G = pixels_of(gt[j]);
      PixelSet U = G;
      U.insert(P.begin(), P.end());
      const double iou = U.empty() ? 0.0
                                   : static_cast<double>(intersection_size(G, P)) / U.size();
      if (iou >= thr && iou > best) {
        best = iou;
        arg = static_cast<int>(j);
      }
    }
    if (arg >= 0) {
      used[static_cast<std::size_t>(arg)] = true;
      hit[i] = true;
    }
  }
  std::vector<std::pair<double, double>> pr;  // (recall, precision) per cut-off
  for (std::size_t cut = 1; cut <= preds.size(); ++cut) {
    double tp = 0;
    for (std::size_t i = 0; i < cut; ++i) tp += hit[i];
    pr.push_back({tp / gt.size(), tp / cut});
  }
  double sum = 0.0;
  for (int k = 0; k <= 100; ++k) {
    const double r = k / 100.0;
    double best = 0.0;
    for (auto [rec, prec] : pr)
      if (rec >= r - 1e-12) best = std::max(best, prec);
    sum += best;
  }
  return sum / 101.0;
}

// ---------------------------------------------------------------------------
// Exhaustiveness of target-to-source instance mixing.
//
// Recomputes the expected supervision set from scratch (topmost pasted record
// per pixel, source records minus pasted pixels, occlusion drop) and compares
// it, as a set of (class, pixel set) pairs, with what the library produced.
// Also checks that every thing pixel of the mixed semantic map is covered by
// exactly one record of the same class. Returns human-readable violations.

struct ImixOracleInput {
  const InstanceSet* filtered;
  const PanopticLabel* source;
  double eps;
};

inline std::vector<std::string> imix_t2s_violations(const ImixOracleInput& in,
                                                    const LabelMap2D& mixed_semantic,
                                                    const InstanceSet& supervision,
                                                    const ClassCatalog& cat) {
  std::vector<std::string> v;
  const std::size_t n = mixed_semantic.pixels();
  const auto& pasted = in.filtered->records;

  // topmost pasted record: highest score, ties to the larger id
  std::vector<int> top(n, -1);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < pasted.size(); ++k) {
      if (!pasted[k].mask.test(i)) continue;
      if (top[i] < 0) {
        top[i] = static_cast<int>(k);
        continue;
      }
      const auto& cur = pasted[static_cast<std::size_t>(top[i])];
      if (std::tie(pasted[k].score, pasted[k].id) > std::tie(cur.score, cur.id))
        top[i] = static_cast<int>(k);
    }

  std::multiset<std::pair<ClassId, PixelSet>> expected, actual;
  for (std::size_t k = 0; k < pasted.size(); ++k) {
    PixelSet px;
    for (std::size_t i = 0; i < n; ++i)
      if (top[i] == static_cast<int>(k)) px.insert(i);
    if (!px.empty()) expected.insert({pasted[k].class_id, px});
  }
  for (const auto& r : in.source->instances.records) {
    const auto all = pixels_of(r.mask);
    PixelSet px;
    for (auto i : all)
      if (top[i] < 0) px.insert(i);
    if (!px.empty() && static_cast<double>(px.size()) / all.size() >= in.eps)
      expected.insert({r.class_id, px});
  }
  for (const auto& r : supervision.records) actual.insert({r.class_id, pixels_of(r.mask)});

  for (const auto& e : expected)
    if (actual.count(e) < expected.count(e))
      v.push_back("expected record of class " + std::to_string(e.first) + " with " +
                  std::to_string(e.second.size()) + " px is missing");
  for (const auto& a : actual)
    if (expected.count(a) < actual.count(a))
      v.push_back("unexpected record of class " + std::to_string(a.first));

  // every thing pixel: exactly one covering record, of the same class
  for (std::size_t i = 0; i < n; ++i) {
    int covering = 0;
    bool class_ok = true;
    for (const auto& r : supervision.records)
      if (r.mask.test(i)) {
        ++covering;
        class_ok &= (r.class_id == mixed_semantic[i]);
      }
    const ClassId c = mixed_semantic[i];
    const bool thing = c != kIgnore && cat.is_thing(c);
    if (thing && covering != 1)
      v.push_back("thing pixel " + std::to_string(i) + " covered by " +
                  std::to_string(covering) + " records");
    if (!thing && covering != 0)
      v.push_back("non-thing pixel " + std::to_string(i) + " covered by a record");
    if (covering && !class_ok) v.push_back("class mismatch at pixel " + std::to_string(i));
  }
  return v;
}

}  // namespace panmix::testing
