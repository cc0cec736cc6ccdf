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


// Argument parsing and exit-code mapping for the panmix tool.
//
//   0  success
//   1  usage or validation error (including failed checks)
//   2  I/O error

#pragma once

#include <filesystem>
#include <iostream>
#include <ostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "panmix/cli/commands.hpp"

namespace panmix::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 1;
inline constexpr int kExitIo = 2;

namespace detail {

class Formatter : public CLI::Formatter {
 public:
  Formatter() { column_width(34); }
};

inline void add_catalog(CLI::App* app, std::optional<fs::path>& catalog) {
  app->add_option("--catalog", catalog,
                  "class catalog JSON (default: the 16-class street catalog)");
}

inline void add_jobs(CLI::App* app, int& jobs) {
  app->add_option("--jobs", jobs, "worker threads (default: logical cores)")
      ->check(CLI::PositiveNumber);
}

}  // namespace detail

inline int dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"panmix: cross-domain mixing, pseudo-labels, losses and evaluation for "
               "panoptic domain adaptation"};
  app.name("panmix");
  app.formatter(std::make_shared<detail::Formatter>());
  app.require_subcommand(1);
  const int default_jobs_n = default_jobs();

  MixOptions mix;
  mix.jobs = default_jobs_n;
  auto* c_mix = app.add_subcommand("mix", "compose ClassMix or IMix training samples");
  c_mix->add_option("--mode", mix.mode, "classmix or imix")
      ->required()
      ->check(CLI::IsMember({"classmix", "imix"}));
  c_mix->add_option("--direction", mix.direction, "IMix direction: t2s or s2t")
      ->check(CLI::IsMember({"t2s", "s2t"}))
      ->capture_default_str();
  c_mix->add_option("--tau", mix.tau, "instance confidence threshold")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  c_mix->add_option("--seed", mix.seed, "random seed")->capture_default_str();
  c_mix->add_option("--source", mix.source, "source manifest (images with labels)")->required();
  c_mix->add_option("--target", mix.target, "target manifest (images with probs or instances)")
      ->required();
  c_mix->add_option("--out", mix.out, "output directory")->required();
  c_mix->add_option("--pairs", mix.pairs, "number of samples (default: one per source image)");
  c_mix->add_option("--confidence", mix.confidence, "pixel confidence threshold for k")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  c_mix->add_option("--eps", mix.eps, "minimum visible fraction of an occluded instance")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  detail::add_catalog(c_mix, mix.catalog);
  detail::add_jobs(c_mix, mix.jobs);

  PseudoOptions pseudo;
  auto* c_pseudo = app.add_subcommand("pseudo", "semantic pseudo-labels and instance filtering");
  c_pseudo->add_option("--probs", pseudo.probs, "PRB1 probability volume")->required();
  c_pseudo->add_option("--instances", pseudo.instances, "predicted instances (JSON lines)");
  c_pseudo->add_option("--tau", pseudo.tau, "instance confidence threshold")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  c_pseudo->add_option("--confidence", pseudo.confidence, "pixel confidence threshold for k")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  c_pseudo->add_option("--weighting", pseudo.weighting, "image (k per image) or pixel")
      ->check(CLI::IsMember({"image", "pixel"}))
      ->capture_default_str();
  c_pseudo->add_option("--out", pseudo.out, "output directory")->required();

  LossCheckOptions lc;
  auto* c_lc = app.add_subcommand("loss-check", "finite-difference check of every loss gradient");
  c_lc->add_option("--trials", lc.trials, "random problems per loss")->capture_default_str();
  c_lc->add_option("--seed", lc.seed, "random seed")->capture_default_str();
  c_lc->add_option("--tol", lc.tolerance, "relative error tolerance")->capture_default_str();

  CdaOptions cda;
  auto* c_cda = app.add_subcommand("cda", "pixel-text similarity maps and alignment loss");
  c_cda->add_option("--bank", cda.bank, "CEB1 prompt embedding bank")->required();
  c_cda->add_option("--features", cda.features, "PRB1 feature volume (H x W x D)")->required();
  c_cda->add_option("--labels", cda.labels, "label PNG; enables the loss");
  c_cda->add_flag("--raw-features", cda.raw_features, "do not L2-normalize pixel features");
  c_cda->add_option("--out", cda.out, "output directory")->required();
  detail::add_catalog(c_cda, cda.catalog);

  EvalOptions ev;
  ev.jobs = default_jobs_n;
  auto* c_eval = app.add_subcommand("eval", "PQ, mIoU and mask AP over two label directories");
  c_eval->add_option("--gt", ev.gt, "ground-truth panoptic directory")->required();
  c_eval->add_option("--pred", ev.pred, "predicted panoptic directory")->required();
  c_eval->add_option("--metrics", ev.metrics, "comma list of pq, miou, ap")->capture_default_str();
  c_eval->add_option("--out", ev.out, "report JSON path");
  detail::add_catalog(c_eval, ev.catalog);
  detail::add_jobs(c_eval, ev.jobs);

  FuseOptions fuse;
  auto* c_fuse = app.add_subcommand("fuse", "merge semantic probabilities with instances");
  c_fuse->add_option("--sem", fuse.sem, "PRB1 probability volume")->required();
  c_fuse->add_option("--inst", fuse.inst, "predicted instances (JSON lines)")->required();
  c_fuse->add_option("--out", fuse.out, "panoptic PNG path (sidecar written next to it)")
      ->required();
  c_fuse->add_option("--floor", fuse.floor, "minimum instance score")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  detail::add_catalog(c_fuse, fuse.catalog);

  auto* c_synth = app.add_subcommand("synth", "synthetic adaptation lab");
  c_synth->require_subcommand(1);
  SynthRunOptions run;
  run.jobs = default_jobs_n;
  auto* c_run = c_synth->add_subcommand("run", "train once and write trace, model and samples");
  c_run->add_option("--config", run.config, "lab config file")->required();
  c_run->add_option("--out", run.out, "output directory")->required();
  c_run->add_option("--seed", run.seed, "overrides the config seed");
  c_run->add_option("--samples", run.samples, "evaluation images to render")
      ->capture_default_str();
  detail::add_jobs(c_run, run.jobs);
  SynthAblateOptions abl;
  abl.jobs = default_jobs_n;
  auto* c_abl = c_synth->add_subcommand("ablate", "run an ablation grid over several seeds");
  c_abl->add_option("--grid", abl.grid, "grid file")->required();
  c_abl->add_option("--out", abl.out, "directory for ablation.json and ablation.txt");
  detail::add_jobs(c_abl, abl.jobs);

  VizOptions viz;
  auto* c_viz = app.add_subcommand("viz", "render a panoptic label over its image");
  c_viz->add_option("--image", viz.image, "image PNG")->required();
  c_viz->add_option("--label", viz.label, "panoptic PNG (with sidecar)")->required();
  c_viz->add_option("--out", viz.out, "output PNG")->required();
  detail::add_catalog(c_viz, viz.catalog);

  ConvertOptions conv;
  auto* c_conv = app.add_subcommand("convert", "instance JSON lines <-> panoptic PNG");
  c_conv->add_option("--in", conv.in, "input .jsonl or .png")->required();
  c_conv->add_option("--out", conv.out, "output .png or .jsonl")->required();
  c_conv->add_option("--height", conv.height, "frame height for an empty instance file");
  c_conv->add_option("--width", conv.width, "frame width for an empty instance file");
  detail::add_catalog(c_conv, conv.catalog);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    CLI::App* leaf = &app;
    for (auto subs = leaf->get_subcommands(); !subs.empty(); subs = leaf->get_subcommands())
      leaf = subs.front();
    out << leaf->help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    CLI::App* leaf = &app;
    for (auto subs = leaf->get_subcommands(); !subs.empty(); subs = leaf->get_subcommands())
      leaf = subs.front();
    err << "panmix: " << e.what() << "\n\n" << leaf->help();
    return kExitValidation;
  }

  try {
    if (c_mix->parsed()) return run_mix(mix, out);
    if (c_pseudo->parsed()) return run_pseudo(pseudo, out);
    if (c_lc->parsed()) return run_loss_check(lc, out);
    if (c_cda->parsed()) return run_cda(cda, out);
    if (c_eval->parsed()) return run_eval(ev, out);
    if (c_fuse->parsed()) return run_fuse(fuse, out);
    if (c_run->parsed()) return run_synth(run, out);
    if (c_abl->parsed()) return run_ablate(abl, out);
    if (c_viz->parsed()) return run_viz(viz, out);
    if (c_conv->parsed()) return run_convert(conv, out);
  } catch (const IoError& e) {
    err << "panmix: " << e.what() << "\n";
    return kExitIo;
  } catch (const fs::filesystem_error& e) {
    err << "panmix: " << e.what() << "\n";
    return kExitIo;
  } catch (const std::exception& e) {
    err << "panmix: " << e.what() << "\n";
    return kExitValidation;
  }
  return kExitValidation;
}

}  // namespace panmix::cli
