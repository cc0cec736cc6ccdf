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


// Subcommand implementations. Each takes its parsed options, writes
// artifacts atomically and returns an exit code; errors propagate as
// exceptions and are mapped to exit codes by dispatch().

#pragma once

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "json.hpp"
#include "panmix/cda.hpp"
#include "panmix/cli/manifest.hpp"
#include "panmix/cli/viz.hpp"
#include "panmix/core/catalog_io.hpp"
#include "panmix/core/parallel.hpp"
#include "panmix/core/rle.hpp"
#include "panmix/fusion.hpp"
#include "panmix/gradcheck.hpp"
#include "panmix/metrics.hpp"
#include "panmix/mixing.hpp"
#include "panmix/pseudo.hpp"
#include "panmix/synthlab/ablation.hpp"
#include "panmix/synthlab/config.hpp"

namespace panmix::cli {

inline ClassCatalog load_catalog(const std::optional<fs::path>& path) {
  if (!path) return ClassCatalog::cityscapes16();
  try {
    return parse_catalog(read_text(*path));
  } catch (const ValidationError& e) {
    throw ValidationError(path->string() + ": " + e.what());
  }
}

inline double round4(double v) { return synthlab::round4(v); }

inline std::string numbered(const std::string& prefix, std::size_t k, const std::string& suffix) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04zu", k);
  return prefix + buf + suffix;
}

inline std::string dump(const nlohmann::ordered_json& j) { return j.dump(2) + "\n"; }

// ---------------------------------------------------------------- mix

struct MixOptions {
  std::string mode;  // classmix | imix
  std::string direction = "t2s";
  double tau = 0.75;
  std::uint64_t seed = 1;
  fs::path source, target, out;
  int pairs = 0;  // 0: one per source record
  double confidence = kDefaultPseudoConfidence;
  double eps = kDefaultOcclusionEps;
  std::optional<fs::path> catalog;
  int jobs = 1;
};

// Pair k mixes source record k mod |source| with a target record drawn from
// the stream (seed, k), so outputs do not depend on --jobs.
inline int run_mix(const MixOptions& o, std::ostream& out) {
  if (o.mode != "classmix" && o.mode != "imix")
    throw ValidationError("--mode must be classmix or imix, got '" + o.mode + "'");
  const auto direction = synthlab::parse_direction(o.direction);
  const FilterConfig filter(o.tau);
  const auto cat = load_catalog(o.catalog);
  const auto src = load_manifest(o.source);
  const auto tgt = load_manifest(o.target);
  if (src.records.empty() || tgt.records.empty())
    throw ValidationError("mix: source and target manifests must be non-empty");
  for (const auto& r : src.records)
    if (!r.label) throw ValidationError("mix: source record " + r.image.string() + " has no label");
  for (const auto& r : tgt.records) {
    if (o.mode == "classmix" && !r.probs)
      throw ValidationError("mix: classmix needs probs for target " + r.image.string());
    if (o.mode == "imix" && !r.instances)
      throw ValidationError("mix: imix needs instances for target " + r.image.string());
  }
  const std::size_t pairs = o.pairs > 0 ? static_cast<std::size_t>(o.pairs) : src.records.size();
  std::vector<nlohmann::ordered_json> entries(pairs);

  parallel_for(pairs, o.jobs, [&](std::size_t k) {
    SeededRng rng(derive_seed(o.seed, k));
    const auto& s = src.records[k % src.records.size()];
    const auto& t = tgt.records[rng.below(tgt.records.size())];
    const auto xs = load_image(s.image);
    const auto ys = load_panoptic(*s.label, cat);
    require_dims(*s.label, xs.height, xs.width, ys.semantic.height, ys.semantic.width);
    const auto xt = load_image(t.image);
    require_dims(t.image, xs.height, xs.width, xt.height, xt.width);

    MixedSample m;
    nlohmann::ordered_json meta;
    meta["mode"] = o.mode;
    meta["source"] = s.image.generic_string();
    meta["target"] = t.image.generic_string();
    if (o.mode == "classmix") {
      const auto probs = load_probs(*t.probs);
      require_dims(*t.probs, xt.height, xt.width, probs.height, probs.width);
      const auto pseudo = semantic_argmax(probs, o.confidence);
      const auto mask = classmix_select(ys.semantic, rng);
      m = dacs_compose(xs, ys.semantic, xt, pseudo.labels, pseudo.weights(), mask);
      meta["k"] = pseudo.k;
    } else {
      auto preds = load_instances(*t.instances);
      for (const auto& r : preds.records)
        require_dims(*t.instances, xt.height, xt.width, r.mask.height, r.mask.width);
      const auto kept = filter_instances(preds, filter, xt.height, xt.width);
      m = imix_compose(xt, kept.kept, xs, ys, direction, o.eps);
      meta["direction"] = o.direction;
      meta["tau"] = o.tau;
      meta["kept"] = kept.kept.records.size();
      meta["void_rle"] = rle_encode(m.instance_void);
    }
    BinaryMask from_source(m.image.height, m.image.width);
    for (std::size_t i = 0; i < m.origin.size(); ++i) from_source.set(i, m.origin[i] == Origin::source);
    meta["source_rle"] = rle_encode(from_source);

    const auto name = numbered("mix_", k, "");
    write_file_atomic(o.out / (name + ".png"), encode_png(m.image));
    write_file_atomic(o.out / (name + "_semantic.png"), encode_label_png(m.semantic));
    RawVolume conf(m.image.height, m.image.width, 1);
    if (m.pixel_confidence.size() == conf.data.size()) conf.data = m.pixel_confidence;
    write_file_atomic(o.out / (name + "_confidence.prb"), write_volume(conf));
    nlohmann::ordered_json entry{{"image", name + ".png"},
                                 {"semantic", name + "_semantic.png"},
                                 {"confidence", name + "_confidence.prb"},
                                 {"instances", nullptr},
                                 {"meta", name + "_meta.json"}};
    if (o.mode == "imix") {
      write_file_atomic(o.out / (name + "_instances.jsonl"),
                        write_instances_jsonl(m.instance_supervision));
      entry["instances"] = name + "_instances.jsonl";
    }
    write_file_atomic(o.out / (name + "_meta.json"), dump(meta));
    entries[k] = std::move(entry);
  });

  nlohmann::ordered_json index;
  index["mode"] = o.mode;
  index["seed"] = o.seed;
  index["records"] = entries;
  write_file_atomic(o.out / "outputs.json", dump(index));
  out << "mix: wrote " << pairs << " " << o.mode << " samples to " << o.out.string() << "\n";
  return 0;
}

// ---------------------------------------------------------------- pseudo

struct PseudoOptions {
  fs::path probs;
  std::optional<fs::path> instances;
  double tau = 0.75;
  double confidence = kDefaultPseudoConfidence;
  std::string weighting = "image";  // image | pixel
  fs::path out;
};

inline int run_pseudo(const PseudoOptions& o, std::ostream& out) {
  if (o.weighting != "image" && o.weighting != "pixel")
    throw ValidationError("--weighting must be image or pixel, got '" + o.weighting + "'");
  const FilterConfig filter(o.tau);
  const auto probs = load_probs(o.probs);
  const auto pseudo = semantic_argmax(probs, o.confidence);
  RawVolume w(probs.height, probs.width, 1);
  w.data = pseudo.weights(o.weighting == "pixel" ? ConfidenceMode::per_pixel
                                                 : ConfidenceMode::per_image);
  write_file_atomic(o.out / "pseudo_semantic.png", encode_label_png(pseudo.labels));
  write_file_atomic(o.out / "pseudo_weights.prb", write_volume(w));
  nlohmann::ordered_json rep;
  rep["k"] = round4(pseudo.k);
  rep["confidence_threshold"] = o.confidence;
  rep["weighting"] = o.weighting;
  if (o.instances) {
    const auto preds = load_instances(*o.instances);
    for (const auto& r : preds.records)
      require_dims(*o.instances, probs.height, probs.width, r.mask.height, r.mask.width);
    const auto kept = filter_instances(preds, filter, probs.height, probs.width);
    write_file_atomic(o.out / "filtered_instances.jsonl", write_instances_jsonl(kept.kept));
    rep["tau"] = o.tau;
    rep["predicted"] = preds.records.size();
    rep["kept"] = kept.kept.records.size();
    out << "pseudo: kept " << kept.kept.records.size() << " of " << preds.records.size()
        << " instances above tau " << o.tau << "\n";
  }
  write_file_atomic(o.out / "pseudo.json", dump(rep));
  out << "pseudo: k = " << round4(pseudo.k) << "\n";
  return 0;
}

// ---------------------------------------------------------------- loss-check

struct LossCheckOptions {
  int trials = 100;
  std::uint64_t seed = 1;
  double tolerance = 1e-4;
};

inline int run_loss_check(const LossCheckOptions& o, std::ostream& out) {
  detail::require(o.trials >= 1, "--trials must be positive");
  const auto rows = gradcheck::run_suite(o.trials, o.seed, o.tolerance);
  char buf[128];
  std::snprintf(buf, sizeof buf, "%-18s %7s %12s  %s\n", "loss", "trials", "max rel err", "result");
  out << buf;
  bool ok = true;
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%-18s %7d %12.3e  %s\n", r.name.c_str(), r.trials,
                  r.max_error, r.passed ? "PASS" : "FAIL");
    out << buf;
    ok &= r.passed;
  }
  return ok ? 0 : 1;
}

// ---------------------------------------------------------------- cda

struct CdaOptions {
  fs::path bank, features;
  std::optional<fs::path> labels;
  bool raw_features = false;  // skip per-pixel L2 normalization
  std::optional<fs::path> catalog;
  fs::path out;
};

inline int run_cda(const CdaOptions& o, std::ostream& out) {
  std::optional<std::size_t> expect;
  if (o.catalog) expect = load_catalog(o.catalog).size();
  const auto bank = read_embedding_bank(read_file(o.bank), expect);
  const auto anchors = class_mean_embeddings(bank);
  const FeatureMap f = read_volume(read_file(o.features)).as<FeatureTag>();
  const auto sim = similarity_map(f, anchors, !o.raw_features);
  write_file_atomic(o.out / "similarity.prb", write_volume(sim));
  nlohmann::ordered_json rep{{"classes", anchors.classes}, {"dims", anchors.dims},
                             {"normalized_features", !o.raw_features}};
  if (o.labels) {
    const auto y = decode_label_png(read_file(*o.labels));
    require_dims(*o.labels, f.height, f.width, y.height, y.width);
    const double loss = cda_loss(sim, y).value;
    rep["loss"] = loss;
    out << "cda: loss " << loss << "\n";
  }
  write_file_atomic(o.out / "cda.json", dump(rep));
  out << "cda: wrote " << (o.out / "similarity.prb").string() << "\n";
  return 0;
}

// ---------------------------------------------------------------- eval

struct EvalOptions {
  fs::path gt, pred;
  std::string metrics = "pq,miou,ap";
  std::optional<fs::path> catalog;
  std::optional<fs::path> out;  // report JSON
  int jobs = 1;
};

struct EvalReport {
  ClassCatalog catalog;
  std::size_t images = 0;
  bool pq = false, miou = false, ap = false;
  PqStats pq_stats;
  IouStats iou_stats;
  ApResult ap_result;
};

// Panoptic PNGs (with sidecars) in `dir`, sorted by name.
inline std::vector<std::string> panoptic_names(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw IoError("not a directory: " + dir.string());
  std::vector<std::string> names;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_regular_file() && e.path().extension() == ".png" &&
        fs::is_regular_file(sidecar_path(e.path())))
      names.push_back(e.path().filename().string());
  std::sort(names.begin(), names.end());
  return names;
}

inline EvalReport evaluate_dirs(const EvalOptions& o) {
  EvalReport rep;
  rep.catalog = load_catalog(o.catalog);
  for (const auto& m : synthlab::detail::split_list(o.metrics)) {
    if (m == "pq") rep.pq = true;
    else if (m == "miou") rep.miou = true;
    else if (m == "ap") rep.ap = true;
    else throw ValidationError("unknown metric '" + m + "' (expected pq, miou or ap)");
  }
  const auto names = panoptic_names(o.gt);
  if (names.empty()) throw ValidationError("eval: no panoptic labels in " + o.gt.string());
  for (const auto& n : names) require_file(o.pred / n);
  const auto& cat = rep.catalog;
  std::vector<PqStats> pq(names.size());
  std::vector<IouStats> iou(names.size());
  std::vector<PanopticLabel> gts(names.size()), preds(names.size());
  parallel_for(names.size(), o.jobs, [&](std::size_t k) {
    gts[k] = load_panoptic(o.gt / names[k], cat);
    preds[k] = load_panoptic(o.pred / names[k], cat);
    if (rep.pq) pq[k] = panoptic_quality(gts[k], preds[k], cat);
    if (rep.miou) iou[k] = mean_iou(gts[k].semantic, preds[k].semantic, cat);
  });
  rep.images = names.size();
  rep.pq_stats = PqStats(cat.size());
  rep.iou_stats = IouStats(cat.size());
  ApAccumulator acc(cat);
  for (std::size_t k = 0; k < names.size(); ++k) {
    if (rep.pq) rep.pq_stats += pq[k];
    if (rep.miou) rep.iou_stats += iou[k];
    if (rep.ap) acc.add_image(gts[k].instances, preds[k].instances);
  }
  if (rep.ap) rep.ap_result = acc.evaluate();
  return rep;
}

inline std::string eval_json(const EvalReport& r) {
  using J = nlohmann::ordered_json;
  const auto opt = [](std::optional<double> v) -> J { return v ? J(round4(*v)) : J(nullptr); };
  J j;
  j["format"] = "panmix-eval-1";
  j["images"] = r.images;
  J mean = J::object();
  if (r.pq) {
    mean["mpq"] = round4(r.pq_stats.mean_pq());
    mean["msq"] = round4(r.pq_stats.mean_sq());
    mean["mrq"] = round4(r.pq_stats.mean_rq());
  }
  if (r.miou) mean["miou"] = round4(r.iou_stats.mean_iou());
  if (r.ap) mean["map"] = round4(r.ap_result.map);
  j["mean"] = mean;
  j["per_class"] = J::array();
  for (std::size_t c = 0; c < r.catalog.size(); ++c) {
    J row{{"class_id", c},
          {"name", r.catalog.names()[c]},
          {"thing", static_cast<bool>(r.catalog.thing_flags()[c])}};
    if (r.pq) {
      const auto& t = r.pq_stats.per_class[c];
      const bool p = t.present();
      row["pq"] = opt(p ? std::optional(t.pq()) : std::nullopt);
      row["sq"] = opt(p ? std::optional(t.sq()) : std::nullopt);
      row["rq"] = opt(p ? std::optional(t.rq()) : std::nullopt);
      row["tp"] = t.tp;
      row["fp"] = t.fp;
      row["fn"] = t.fn;
    }
    if (r.miou) row["iou"] = opt(r.iou_stats.iou(c));
    if (r.ap) row["ap"] = opt(r.ap_result.per_class[c]);
    j["per_class"].push_back(row);
  }
  return dump(j);
}

inline std::string eval_text(const EvalReport& r) {
  std::string s;
  char buf[160];
  const auto cell = [](bool on, std::optional<double> v) {
    char b[16];
    if (!on) return std::string("        ");
    if (!v) return std::string("       -");
    std::snprintf(b, sizeof b, "%8.2f", 100.0 * *v);
    return std::string(b);
  };
  std::snprintf(buf, sizeof buf, "%-16s %8s %8s %8s %8s %8s\n", "class", "PQ", "SQ", "RQ", "IoU",
                "AP");
  s += buf;
  for (std::size_t c = 0; c < r.catalog.size(); ++c) {
    const auto& t = r.pq ? r.pq_stats.per_class[c] : ClassPqTally{};
    const bool p = r.pq && t.present();
    const std::optional<double> none;
    s += (r.catalog.names()[c] + std::string(16, ' ')).substr(0, 16) + " " +
         cell(r.pq, p ? std::optional(t.pq()) : none) + " " +
         cell(r.pq, p ? std::optional(t.sq()) : none) + " " +
         cell(r.pq, p ? std::optional(t.rq()) : none) + " " +
         cell(r.miou, r.miou ? r.iou_stats.iou(c) : none) + " " +
         cell(r.ap, r.ap ? r.ap_result.per_class[c] : none) + "\n";
  }
  s += std::string("mean             ") + cell(r.pq, r.pq_stats.mean_pq()) + " " +
       cell(r.pq, r.pq_stats.mean_sq()) + " " + cell(r.pq, r.pq_stats.mean_rq()) + " " +
       cell(r.miou, r.iou_stats.mean_iou()) + " " + cell(r.ap, r.ap_result.map) + "\n";
  return s;
}

inline int run_eval(const EvalOptions& o, std::ostream& out) {
  const auto rep = evaluate_dirs(o);
  if (o.out) write_file_atomic(*o.out, eval_json(rep));
  out << eval_text(rep);
  return 0;
}

// ---------------------------------------------------------------- fuse

struct FuseOptions {
  fs::path sem, inst, out;  // out: panoptic PNG; the sidecar goes next to it
  double floor = 0.5;
  std::optional<fs::path> catalog;
};

inline int run_fuse(const FuseOptions& o, std::ostream& out) {
  const auto cat = load_catalog(o.catalog);
  const FusionConfig cfg(o.floor);
  const auto probs = load_probs(o.sem);
  const auto inst = load_instances(o.inst);
  for (const auto& r : inst.records)
    require_dims(o.inst, probs.height, probs.width, r.mask.height, r.mask.width);
  const auto label = merge(probs, inst, cat, cfg);
  save_panoptic(o.out, label, cat);
  out << "fuse: " << label.instances.records.size() << " of " << inst.records.size()
      << " instances kept, wrote " << o.out.string() << "\n";
  return 0;
}

// ---------------------------------------------------------------- viz

struct VizOptions {
  fs::path image, label, out;
  std::optional<fs::path> catalog;
};

inline int run_viz(const VizOptions& o, std::ostream& out) {
  const auto cat = load_catalog(o.catalog);
  const auto img = load_image(o.image);
  const auto label = load_panoptic(o.label, cat);
  write_file_atomic(o.out, encode_png(visualize(label, img, VizPalette::for_catalog(cat))));
  out << "viz: wrote " << o.out.string() << "\n";
  return 0;
}

// ---------------------------------------------------------------- convert

struct ConvertOptions {
  fs::path in, out;
  int height = 0, width = 0;  // only needed for an empty instance file
  std::optional<fs::path> catalog;
};

// Disjoint instances become a panoptic label whose non-instance pixels are
// IGNORE.
inline PanopticLabel instances_to_panoptic(const InstanceSet& set, int h, int w) {
  PanopticLabel L;
  L.semantic = LabelMap2D(h, w);
  L.instances = set;
  for (const auto& r : set.records) {
    if (r.mask.height != h || r.mask.width != w)
      throw ValidationError("convert: instance " + std::to_string(r.id) + " is " +
                            std::to_string(r.mask.height) + "x" + std::to_string(r.mask.width) +
                            ", expected " + std::to_string(h) + "x" + std::to_string(w));
    for (std::size_t i = 0; i < r.mask.pixels(); ++i) {
      if (!r.mask.test(i)) continue;
      if (L.semantic[i] != kIgnore)
        throw ValidationError("convert: instance masks overlap at pixel " + std::to_string(i));
      L.semantic[i] = r.class_id;
    }
  }
  return L;
}

inline int run_convert(const ConvertOptions& o, std::ostream& out) {
  const auto cat = load_catalog(o.catalog);
  const auto ext_in = o.in.extension().string(), ext_out = o.out.extension().string();
  if (ext_in == ".jsonl" && ext_out == ".png") {
    const auto set = load_instances(o.in);
    int h = o.height, w = o.width;
    if (!set.records.empty()) {
      h = set.records.front().mask.height;
      w = set.records.front().mask.width;
    }
    if (h <= 0 || w <= 0)
      throw ValidationError("convert: empty instance file needs --height and --width");
    save_panoptic(o.out, instances_to_panoptic(set, h, w), cat);
  } else if (ext_in == ".png" && ext_out == ".jsonl") {
    write_file_atomic(o.out, write_instances_jsonl(load_panoptic(o.in, cat).instances));
  } else {
    throw ValidationError("convert: expected .jsonl -> .png or .png -> .jsonl, got " + ext_in +
                          " -> " + ext_out);
  }
  out << "convert: wrote " << o.out.string() << "\n";
  return 0;
}

// ---------------------------------------------------------------- synth

struct SynthRunOptions {
  fs::path config, out;
  std::optional<std::uint64_t> seed;
  int samples = 4;
  int jobs = 1;
};

inline std::string trace_json(const synthlab::TrainConfig& cfg, const synthlab::TrainResult& r) {
  using J = nlohmann::ordered_json;
  J j;
  j["format"] = "panmix-trace-1";
  j["seed"] = cfg.seed;
  j["iterations"] = cfg.iterations;
  j["imix_steps"] = r.imix_steps;
  j["trace"] = J::array();
  for (const auto& e : r.trace) {
    J row{{"iteration", e.iteration}, {"mean_loss", e.mean_loss}};
    row.update(synthlab::metrics_json(e.metrics));
    row["teacher_gap"] = e.teacher_gap;
    j["trace"].push_back(row);
  }
  return dump(j);
}

inline int run_synth(const SynthRunOptions& o, std::ostream& out) {
  using namespace synthlab;
  auto cfg = load_train_config(o.config);
  if (o.seed) cfg.seed = *o.seed;
  const auto pools = make_pools(cfg);
  const auto r = train(cfg, pools);
  const auto& cat = cfg.source.catalog;

  write_file_atomic(o.out / "config.cfg", format_train_config(cfg));
  write_file_atomic(o.out / "catalog.json", catalog_to_json(cat));
  write_file_atomic(o.out / "trace.json", trace_json(cfg, r));
  nlohmann::ordered_json model{{"classes", r.student.classes},
                               {"dims", r.student.dims},
                               {"student", r.student.params.values},
                               {"teacher", r.teacher.params.values}};
  write_file_atomic(o.out / "model.json", dump(model));

  const std::size_t n = std::min<std::size_t>(static_cast<std::size_t>(std::max(0, o.samples)),
                                              pools.eval.size());
  const auto palette = VizPalette::for_catalog(cat);
  parallel_for(n, o.jobs, [&](std::size_t k) {
    const auto& img = pools.eval[k];
    const auto p = predict(r.student, img.features, cat, cfg.min_component_area,
                           cfg.fusion_floor);
    const auto name = numbered("eval_", k, ".png");
    write_file_atomic(o.out / "samples/image" / name, encode_png(img.image));
    save_panoptic(o.out / "samples/gt" / name, img.label, cat);
    save_panoptic(o.out / "samples/pred" / name, p.panoptic, cat);
    write_file_atomic(o.out / "samples/viz" / name,
                      encode_png(visualize(p.panoptic, img.image, palette)));
  });

  char buf[160];
  std::snprintf(buf, sizeof buf, "%9s %10s %8s %8s %8s %8s %8s %11s\n", "iteration", "loss", "mSQ",
                "mRQ", "mPQ", "mIoU", "mAP", "teacher gap");
  out << buf;
  for (const auto& e : r.trace) {
    const auto& m = e.metrics;
    std::snprintf(buf, sizeof buf, "%9d %10.4f %8.2f %8.2f %8.2f %8.2f %8.2f %11.2e\n",
                  e.iteration, e.mean_loss, 100 * m.msq, 100 * m.mrq, 100 * m.mpq, 100 * m.miou,
                  100 * m.map, e.teacher_gap);
    out << buf;
  }
  out << "synth run: " << r.imix_steps << " IMix steps, outputs in " << o.out.string() << "\n";
  return 0;
}

struct SynthAblateOptions {
  fs::path grid;
  std::optional<fs::path> out;
  int jobs = 1;
};

inline int run_ablate(const SynthAblateOptions& o, std::ostream& out) {
  synthlab::AblationGrid grid;
  try {
    grid = synthlab::parse_grid(read_text(o.grid));
  } catch (const ValidationError& e) {
    throw ValidationError(o.grid.string() + ": " + e.what());
  }
  const auto rep = synthlab::run_ablation(grid, o.jobs);
  const auto text = synthlab::ablation_text(rep);
  if (o.out) {
    write_file_atomic(*o.out / "ablation.json", synthlab::ablation_json(rep));
    write_file_atomic(*o.out / "ablation.txt", text);
  }
  out << text;
  return 0;
}

}  // namespace panmix::cli
