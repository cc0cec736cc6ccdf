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


#include <cstdlib>
#include <filesystem>
#include <set>
#include <sstream>

#include <gtest/gtest.h>

#include "panmix/cli/app.hpp"
#include "panmix/synthlab/scene.hpp"
#include "support/generators.hpp"

namespace panmix::cli {
namespace {

struct Run {
  int code = -1;
  std::string out, err;
};

Run panmix(std::vector<std::string> args) {
  args.insert(args.begin(), "panmix");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  Run r;
  r.code = dispatch(static_cast<int>(argv.size()), argv.data(), out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

std::map<std::string, std::vector<std::uint8_t>> snapshot(const fs::path& dir) {
  std::map<std::string, std::vector<std::uint8_t>> files;
  for (const auto& e : fs::recursive_directory_iterator(dir))
    if (e.is_regular_file()) files[fs::relative(e.path(), dir).string()] = read_file(e.path());
  return files;
}

// Source and target scenes from the lab generator, with synthetic teacher
// outputs for the target: softened one-hot probabilities and the true
// instances at random scores.
class CliFixture : public ::testing::Test {
 protected:
  void SetUp() override {
    root = fs::temp_directory_path() /
           ("panmix_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(root);
    fs::create_directories(root / "data");
    write_file_atomic(root / "catalog.json", catalog_to_json(cat));
    auto spec = synthlab::default_source_spec();
    Manifest src{"source", {}}, tgt{"target", {}};
    SeededRng rng(11);
    for (int k = 0; k < 3; ++k) {
      const auto s = synthlab::generate_scene_at(spec, 1, k);
      const auto base = root / "data" / ("src" + std::to_string(k));
      write_file_atomic(base.string() + ".png", encode_png(s.image));
      save_panoptic(base.string() + "_label.png", s.label, cat);
      src.records.push_back({base.string() + ".png", fs::path(base.string() + "_label.png"), {}, {}});
    }
    spec.shift = {45.0, 0.25, {200, 200, 200}, 6.0};
    for (int k = 0; k < 2; ++k) {
      const auto s = synthlab::generate_scene_at(spec, 2, k);
      const auto base = root / "data" / ("tgt" + std::to_string(k));
      write_file_atomic(base.string() + ".png", encode_png(s.image));
      RawVolume p(s.image.height, s.image.width, static_cast<int>(cat.size()));
      for (std::size_t i = 0; i < p.pixels(); ++i)
        for (int c = 0; c < p.channels; ++c)
          p.at(i, c) = c == s.label.semantic[i] ? 0.75 : 0.05;
      write_file_atomic(base.string() + ".prb", write_volume(p));
      auto inst = s.label.instances;
      inst.provenance = Provenance::predicted;
      for (auto& r : inst.records) r.score = 0.5 + 0.5 * rng.uniform();
      write_file_atomic(base.string() + ".jsonl", write_instances_jsonl(inst));
      tgt.records.push_back({base.string() + ".png", {}, fs::path(base.string() + ".prb"),
                             fs::path(base.string() + ".jsonl")});
    }
    write_file_atomic(root / "source.json", manifest_json(src, root));
    write_file_atomic(root / "target.json", manifest_json(tgt, root));
  }
  void TearDown() override { fs::remove_all(root); }

  std::string p(const std::string& rel) const { return (root / rel).string(); }

  ClassCatalog cat = synthlab::synth_catalog();
  fs::path root;
};

TEST_F(CliFixture, EvalOnIdenticalDirsIsPerfect) {
  fs::create_directories(root / "gt");
  for (int k = 0; k < 3; ++k)
    for (const char* ext : {".png", ".json"})
      fs::copy_file(p("data/src" + std::to_string(k) + "_label" + ext),
                    p("gt/s" + std::to_string(k) + ext));
  const auto r = panmix({"eval", "--gt", p("gt"), "--pred", p("gt"), "--catalog", p("catalog.json"),
                         "--out", p("report.json"), "--jobs", "2"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = nlohmann::json::parse(read_text(p("report.json")));
  EXPECT_EQ(j["images"], 3);
  EXPECT_EQ(j["mean"]["mpq"], 1.0);
  EXPECT_EQ(j["mean"]["miou"], 1.0);
  EXPECT_EQ(j["mean"]["map"], 1.0);
  EXPECT_NE(r.out.find("mean"), std::string::npos);
}

TEST_F(CliFixture, EvalReportUsesFourDecimals) {
  fs::create_directories(root / "gt");
  fs::create_directories(root / "pred");
  const auto s = synthlab::generate_scene_at(synthlab::default_source_spec(), 5, 0);
  save_panoptic(root / "gt/a.png", s.label, cat);
  auto pred = s.label;
  pred.instances.records.pop_back();  // drop one object: its pixels fall back to stuff
  for (std::size_t i = 0; i < pred.semantic.pixels(); ++i)
    if (cat.is_thing(pred.semantic[i])) {
      bool covered = false;
      for (const auto& r : pred.instances.records) covered |= r.mask.test(i);
      if (!covered) pred.semantic[i] = 2;
    }
  save_panoptic(root / "pred/a.png", pred, cat);
  const auto r = panmix({"eval", "--gt", p("gt"), "--pred", p("pred"), "--catalog", p("catalog.json"),
                         "--out", p("report.json")});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = nlohmann::json::parse(read_text(p("report.json")));
  std::vector<double> values;
  for (const auto& [k, v] : j["mean"].items()) values.push_back(v.get<double>());
  for (const auto& row : j["per_class"])
    for (const char* key : {"pq", "sq", "rq", "iou", "ap"})
      if (!row[key].is_null()) values.push_back(row[key].get<double>());
  ASSERT_FALSE(values.empty());
  for (double v : values) EXPECT_NEAR(v * 1e4, std::round(v * 1e4), 1e-6) << v;
  EXPECT_LT(j["mean"]["mpq"].get<double>(), 1.0);
}

TEST_F(CliFixture, MissingInputIsAnIoError) {
  const auto r = panmix({"fuse", "--sem", p("nothing.prb"), "--inst", p("data/tgt0.jsonl"),
                         "--out", p("f.png")});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("nothing.prb"), std::string::npos);
}

TEST_F(CliFixture, UnknownFlagPrintsUsage) {
  const auto r = panmix({"loss-check", "--trails", "3"});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("Usage"), std::string::npos);
  EXPECT_NE(r.err.find("--trials"), std::string::npos);
  EXPECT_EQ(panmix({"frobnicate"}).code, 1);
  EXPECT_EQ(panmix({}).code, 1);
  EXPECT_EQ(panmix({"mix", "--mode", "cutmix", "--source", "a", "--target", "b", "--out", "c"}).code, 1);
}

TEST_F(CliFixture, HelpExitsZero) {
  const auto r = panmix({"mix", "--help"});
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("--direction"), std::string::npos);
}

TEST_F(CliFixture, ImixIsByteReproducible) {
  const auto args = [&](const std::string& out, const std::string& jobs) {
    return std::vector<std::string>{"mix", "--mode", "imix", "--tau", "0.75", "--seed", "1",
                                    "--source", p("source.json"), "--target", p("target.json"),
                                    "--catalog", p("catalog.json"), "--out", p(out),
                                    "--pairs", "5", "--jobs", jobs};
  };
  ASSERT_EQ(panmix(args("a", "1")).code, 0);
  ASSERT_EQ(panmix(args("b", "1")).code, 0);
  ASSERT_EQ(panmix(args("c", "3")).code, 0);
  const auto a = snapshot(p("a"));
  EXPECT_EQ(a.size(), 1u + 5u * 5u);  // index + 5 files per sample
  EXPECT_EQ(a, snapshot(p("b")));
  EXPECT_EQ(a, snapshot(p("c")));
  // supervision decodes and covers every thing pixel of the mixed semantic map
  const auto sem = decode_label_png(read_file(p("a/mix_0000_semantic.png")));
  const auto inst = read_instances_jsonl(read_text(p("a/mix_0000_instances.jsonl")));
  for (std::size_t i = 0; i < sem.pixels(); ++i) {
    if (sem[i] == kIgnore || !cat.is_thing(sem[i])) continue;
    int owners = 0;
    for (const auto& r : inst.records) owners += r.mask.test(i) && r.class_id == sem[i];
    EXPECT_EQ(owners, 1) << "pixel " << i;
  }
}

TEST_F(CliFixture, ClassmixSeedsDiffer) {
  const auto args = [&](const std::string& out, const std::string& seed) {
    return std::vector<std::string>{"mix", "--mode", "classmix", "--seed", seed, "--source",
                                    p("source.json"), "--target", p("target.json"), "--catalog",
                                    p("catalog.json"), "--out", p(out)};
  };
  ASSERT_EQ(panmix(args("a", "1")).code, 0);
  ASSERT_EQ(panmix(args("b", "1")).code, 0);
  ASSERT_EQ(panmix(args("c", "2")).code, 0);
  EXPECT_EQ(snapshot(p("a")), snapshot(p("b")));
  EXPECT_NE(snapshot(p("a")), snapshot(p("c")));
}

TEST_F(CliFixture, MixRejectsBadManifests) {
  // target without instances cannot feed IMix
  write_file_atomic(root / "bare.json",
                    std::string(R"({"domain":"target","records":[{"image":"data/tgt0.png"}]})"));
  auto r = panmix({"mix", "--mode", "imix", "--source", p("source.json"), "--target",
                   p("bare.json"), "--catalog", p("catalog.json"), "--out", p("o")});
  EXPECT_EQ(r.code, 1);
  // referenced file missing
  write_file_atomic(root / "gone.json",
                    std::string(R"({"domain":"target","records":[{"image":"data/none.png"}]})"));
  r = panmix({"mix", "--mode", "imix", "--source", p("source.json"), "--target", p("gone.json"),
              "--catalog", p("catalog.json"), "--out", p("o")});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("none.png"), std::string::npos);
  // unknown domain tag
  write_file_atomic(root / "odd.json", std::string(R"({"domain":"mixed","records":[]})"));
  r = panmix({"mix", "--mode", "imix", "--source", p("odd.json"), "--target", p("target.json"),
              "--out", p("o")});
  EXPECT_EQ(r.code, 1);
}

TEST_F(CliFixture, PseudoFiltersByTau) {
  auto r = panmix({"pseudo", "--probs", p("data/tgt0.prb"), "--instances", p("data/tgt0.jsonl"),
                   "--tau", "1", "--out", p("ps")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(read_text(p("ps/filtered_instances.jsonl")), "");
  const auto rep = nlohmann::json::parse(read_text(p("ps/pseudo.json")));
  EXPECT_EQ(rep["kept"], 0);
  EXPECT_EQ(rep["k"], 0.0);  // no pixel reaches 0.968
  r = panmix({"pseudo", "--probs", p("data/tgt0.prb"), "--instances", p("data/tgt0.jsonl"),
              "--tau", "0", "--out", p("ps0")});
  ASSERT_EQ(r.code, 0);
  EXPECT_EQ(read_instances_jsonl(read_text(p("ps0/filtered_instances.jsonl"))).records.size(),
            read_instances_jsonl(read_text(p("data/tgt0.jsonl"))).records.size());
}

TEST_F(CliFixture, FuseWritesDecodablePanoptic) {
  const auto r = panmix({"fuse", "--sem", p("data/tgt0.prb"), "--inst", p("data/tgt0.jsonl"),
                         "--catalog", p("catalog.json"), "--out", p("fused.png")});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto L = load_panoptic(p("fused.png"), cat);
  EXPECT_EQ(L.instances.provenance, Provenance::predicted);
  EXPECT_FALSE(L.instances.empty());
}

TEST_F(CliFixture, CdaEmitsSimilarityAndLoss) {
  const auto bank = synthetic_embedding_bank(6, 3, 8, 5);
  write_file_atomic(root / "bank.ceb", write_embedding_bank(bank));
  SeededRng rng(3);
  FeatureMap f(4, 5, 8);
  for (auto& v : f.data) v = rng.normal();
  write_file_atomic(root / "feat.prb", write_volume(f));
  write_file_atomic(root / "y.png", encode_label_png(testing::random_labels(4, 5, 6, rng)));
  const auto r = panmix({"cda", "--bank", p("bank.ceb"), "--features", p("feat.prb"), "--labels",
                         p("y.png"), "--catalog", p("catalog.json"), "--out", p("cda")});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto sim = read_volume(read_file(p("cda/similarity.prb")));
  EXPECT_EQ(sim.channels, 6);
  EXPECT_EQ(sim.height, 4);
  const auto rep = nlohmann::json::parse(read_text(p("cda/cda.json")));
  EXPECT_GT(rep["loss"].get<double>(), 0.0);
  // a bank for another class count is rejected
  write_file_atomic(root / "bank4.ceb", write_embedding_bank(synthetic_embedding_bank(4, 2, 8, 5)));
  EXPECT_EQ(panmix({"cda", "--bank", p("bank4.ceb"), "--features", p("feat.prb"), "--catalog",
                    p("catalog.json"), "--out", p("cda4")})
                .code,
            1);
}

TEST_F(CliFixture, ConvertRoundTripsDisjointInstances) {
  SeededRng rng(8);
  for (int t = 0; t < 20; ++t) {
    const auto L = testing::random_panoptic(9, 7, cat, rng, 4, false);
    InstanceSet s = L.instances;
    s.provenance = Provenance::predicted;
    for (auto& r : s.records) r.score = rng.uniform();
    const auto text = write_instances_jsonl(s);
    write_file_atomic(root / "in.jsonl", text);
    ASSERT_EQ(panmix({"convert", "--in", p("in.jsonl"), "--out", p("mid.png"), "--catalog",
                      p("catalog.json")})
                  .code,
              0);
    ASSERT_EQ(panmix({"convert", "--in", p("mid.png"), "--out", p("back.jsonl"), "--catalog",
                      p("catalog.json")})
                  .code,
              0);
    EXPECT_EQ(read_text(p("back.jsonl")), text) << "trial " << t;
  }
  InstanceSet overlap;
  overlap.records = {make_record(1, 3, 0.5, testing::rect_mask(4, 4, 0, 0, 2, 2)),
                     make_record(2, 4, 0.5, testing::rect_mask(4, 4, 1, 1, 2, 2))};
  write_file_atomic(root / "ov.jsonl", write_instances_jsonl(overlap));
  EXPECT_EQ(panmix({"convert", "--in", p("ov.jsonl"), "--out", p("ov.png"), "--catalog",
                    p("catalog.json")})
                .code,
            1);
}

TEST_F(CliFixture, LossCheckPasses) {
  const auto r = panmix({"loss-check", "--trials", "5"});
  EXPECT_EQ(r.code, 0);
  std::size_t passes = 0;
  for (auto pos = r.out.find("PASS"); pos != std::string::npos; pos = r.out.find("PASS", pos + 1))
    ++passes;
  EXPECT_EQ(passes, 7u);
  // an impossible tolerance fails the check
  EXPECT_EQ(panmix({"loss-check", "--trials", "2", "--tol", "0"}).code, 1);
}

TEST_F(CliFixture, SynthAblateWritesReport) {
  write_file_atomic(root / "grid.cfg",
                    std::string("seeds = 1,2\nvariants = baseline,imix\ntaus = 1\n"
                                "iterations = 20\nsource_pool = 4\ntarget_pool = 4\n"
                                "eval_images = 2\n"));
  const auto r = panmix({"synth", "ablate", "--grid", p("grid.cfg"), "--out", p("abl"),
                         "--jobs", "2"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = nlohmann::json::parse(read_text(p("abl/ablation.json")));
  ASSERT_EQ(j["variants"].size(), 2u);
  EXPECT_EQ(j["variants"][0]["rows"], j["variants"][1]["rows"]);  // tau = 1 disables IMix
  EXPECT_EQ(read_text(p("abl/ablation.txt")), r.out);
  EXPECT_EQ(panmix({"synth", "ablate", "--grid", p("missing.cfg")}).code, 2);
}

TEST(Viz, EmptyLabelLeavesImageUnchanged) {
  SeededRng rng(1);
  const auto img = testing::random_image(6, 5, rng);
  PanopticLabel L;
  L.semantic = LabelMap2D(6, 5);
  const auto cat = testing::small_catalog();
  EXPECT_EQ(visualize(L, img, VizPalette::for_catalog(cat)), img);
}

TEST(Viz, OneInstanceRecolorsExactlyItsBoundary) {
  SeededRng rng(2);
  const auto cat = testing::small_catalog();
  const auto pal = VizPalette::for_catalog(cat);
  for (int t = 0; t < 50; ++t) {
    const int h = rng.range(3, 9), w = rng.range(3, 9);
    auto img = testing::random_image(h, w, rng);
    for (auto& b : img.data) b = static_cast<std::uint8_t>(b % 200);  // keeps blends off white
    const auto mask = testing::random_mask(h, w, rng, 0.5);
    PanopticLabel L;
    L.semantic = LabelMap2D(h, w);
    for (std::size_t i = 0; i < mask.pixels(); ++i)
      if (mask.test(i)) L.semantic[i] = 3;
    L.instances.records.push_back(make_record(1, 3, 1.0, mask));
    const auto out = visualize(L, img, pal);
    for (int r = 0; r < h; ++r)
      for (int c = 0; c < w; ++c) {
        const std::size_t i = static_cast<std::size_t>(r) * w + c;
        const auto inside = [&](int rr, int cc) {
          return rr >= 0 && rr < h && cc >= 0 && cc < w &&
                 mask.test(static_cast<std::size_t>(rr) * w + cc);
        };
        const bool edge = inside(r, c) && (!inside(r - 1, c) || !inside(r + 1, c) ||
                                           !inside(r, c - 1) || !inside(r, c + 1));
        for (int ch = 0; ch < 3; ++ch) {
          if (edge)
            EXPECT_EQ(out.px(i)[ch], pal.boundary[ch]);
          else if (inside(r, c))
            EXPECT_EQ(out.px(i)[ch], (img.px(i)[ch] + pal.classes[3][ch] + 1) / 2);
          else
            EXPECT_EQ(out.px(i)[ch], img.px(i)[ch]);
        }
      }
  }
}

TEST(Viz, PaletteIsDeterministicAndDistinct) {
  const auto cat = ClassCatalog::cityscapes16();
  const auto a = VizPalette::for_catalog(cat), b = VizPalette::for_catalog(cat);
  EXPECT_EQ(a.classes, b.classes);
  std::set<Rgb> unique(a.classes.begin(), a.classes.end());
  EXPECT_EQ(unique.size(), a.classes.size());
  EXPECT_EQ(unique.count(a.boundary), 0u);
}

TEST(Viz, DimensionMismatchThrows) {
  PanopticLabel L;
  L.semantic = LabelMap2D(2, 2);
  EXPECT_THROW(visualize(L, ImageRGB(3, 3), VizPalette{}), ValidationError);
}

TEST(Binary, ExitCodesFromTheProcess) {
  const std::string exe = PANMIX_CLI_PATH;
  EXPECT_EQ(std::system((exe + " --help > /dev/null").c_str()), 0);
  const int bad = std::system((exe + " eval --gt /nonexistent --pred /nonexistent 2> /dev/null").c_str());
  ASSERT_TRUE(WIFEXITED(bad));
  EXPECT_EQ(WEXITSTATUS(bad), 2);
  const int usage = std::system((exe + " viz --what 2> /dev/null").c_str());
  ASSERT_TRUE(WIFEXITED(usage));
  EXPECT_EQ(WEXITSTATUS(usage), 1);
}

}  // namespace
}  // namespace panmix::cli
