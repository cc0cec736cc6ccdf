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


#include <cmath>
#include <filesystem>

#include <gtest/gtest.h>

#include "panmix/core/check.hpp"
#include "panmix/synthlab/ablation.hpp"
#include "panmix/synthlab/config.hpp"
#include "support/finite_diff.hpp"
#include "support/generators.hpp"

namespace panmix::synthlab {
namespace {

using testing::rect_mask;

// A few dozen iterations on small pools; enough to exercise every path.
TrainConfig tiny_config() {
  TrainConfig c;
  c.iterations = 80;
  c.eval_every = 20;
  c.ema_alpha = 0.9;
  c.source_pool = 6;
  c.target_pool = 6;
  c.eval_images = 3;
  c.imix_start_fraction = 0.5;
  c.tau = 0.3;
  return c;
}

TEST(Scene, SameSeedSameBytes) {
  const auto spec = default_source_spec();
  const auto a = generate_scene_at(spec, 1, 0);
  const auto b = generate_scene_at(spec, 1, 0);
  EXPECT_EQ(a.image.data, b.image.data);
  EXPECT_EQ(a.label.semantic, b.label.semantic);
  EXPECT_EQ(a.label, b.label);
  const auto c = generate_scene_at(spec, 2, 0);
  EXPECT_NE(a.image.data, c.image.data);
}

TEST(Scene, PassesCheckerOverManySeeds) {
  auto spec = default_source_spec();
  for (std::uint64_t s = 0; s < 1000; ++s) {
    spec.shift = s % 2 ? PhotometricShift{45.0, 0.25, {200, 200, 200}, 6.0} : PhotometricShift{};
    const auto scene = generate_scene_at(spec, 7, s);
    const auto err = check_panoptic(scene.label, spec.catalog);
    ASSERT_FALSE(err.has_value()) << "scene " << s << ": " << *err;
    EXPECT_GE(scene.label.instances.records.size(), static_cast<std::size_t>(spec.min_shapes));
  }
}

TEST(Scene, ZeroShapesIsPureStuff) {
  auto spec = default_source_spec();
  spec.min_shapes = spec.max_shapes = 0;
  const auto scene = generate_scene_at(spec, 3, 0);
  EXPECT_TRUE(scene.label.instances.empty());
  for (std::size_t i = 0; i < scene.label.semantic.pixels(); ++i)
    EXPECT_TRUE(spec.catalog.is_stuff(scene.label.semantic[i]));
}

TEST(Scene, UnsatisfiablePackingThrows) {
  auto spec = default_source_spec();
  spec.height = spec.width = 12;
  spec.min_shapes = spec.max_shapes = 30;
  spec.things = {ThingStyle{4, ShapeKind::square, {200, 170, 50}, 5, 5}};
  spec.max_retries = 20;
  EXPECT_THROW(generate_scene_at(spec, 1, 0), ValidationError);

  spec.min_shapes = spec.max_shapes = 1;
  spec.things = {ThingStyle{4, ShapeKind::square, {200, 170, 50}, 13, 13}};  // larger than the frame
  EXPECT_THROW(generate_scene_at(spec, 1, 0), ValidationError);
}

TEST(Scene, ShiftChangesPixelsNotLabels) {
  auto spec = default_source_spec();
  const auto a = generate_scene_at(spec, 5, 1);
  spec.shift = {45.0, 0.25, {200, 200, 200}, 0.0};
  const auto b = generate_scene_at(spec, 5, 1);
  EXPECT_EQ(a.label.semantic, b.label.semantic);
  EXPECT_NE(a.image.data, b.image.data);
}

TEST(Scene, ZeroHueRotationIsIdentity) {
  const auto m = detail::hue_matrix(0.0);
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) EXPECT_NEAR(m[3 * r + c], r == c ? 1.0 : 0.0, 1e-15);
  // gray stays gray under any rotation
  const auto q = detail::hue_matrix(77.0);
  for (int r = 0; r < 3; ++r) EXPECT_NEAR(q[3 * r] + q[3 * r + 1] + q[3 * r + 2], 1.0, 1e-12);
}

TEST(Scene, InvalidSpecThrows) {
  auto spec = default_source_spec();
  spec.shift.fog_alpha = 1.5;
  EXPECT_THROW(spec.validate(), ValidationError);
  spec = default_source_spec();
  spec.bands = {0, 1, 3};  // 3 is a thing
  EXPECT_THROW(spec.validate(), ValidationError);
}

TEST(Ema, ArithmeticExamples) {
  const ParamVector theta{{0.0, 1.0}}, phi{{1.0, 1.0}};
  EXPECT_EQ(ema_update(theta, phi, 1.0).values, theta.values);
  EXPECT_EQ(ema_update(theta, phi, 0.0).values, phi.values);
  const auto r = ema_update(theta, phi, 0.9);
  EXPECT_EQ(r.values[0], 0.09999999999999998);  // 0.9*0 + (1-0.9)*1 in doubles
  EXPECT_NEAR(r.values[0], 0.1, 1e-15);
  EXPECT_EQ(r.values[1], 1.0);
}

TEST(Ema, LengthMismatchThrows) {
  EXPECT_THROW(ema_update(ParamVector{{1.0}}, ParamVector{{1.0, 2.0}}, 0.5), ValidationError);
  EXPECT_THROW(ema_update(ParamVector{{1.0}}, ParamVector{{1.0}}, 1.5), ValidationError);
}

TEST(Ema, ConvergesGeometrically) {
  SeededRng rng(4);
  for (double alpha : {0.5, 0.9, 0.99}) {
    ParamVector theta, phi;
    for (int k = 0; k < 16; ++k) {
      theta.values.push_back(rng.normal());
      phi.values.push_back(rng.normal());
    }
    const auto dist = [&] {
      double m = 0.0;
      for (std::size_t k = 0; k < theta.values.size(); ++k)
        m = std::max(m, std::abs(theta.values[k] - phi.values[k]));
      return m;
    };
    double prev = dist();
    for (int step = 0; step < 50; ++step) {
      theta = ema_update(theta, phi, alpha);
      const double d = dist();
      EXPECT_NEAR(d, alpha * prev, 1e-12);
      prev = d;
    }
  }
}

TEST(Model, InstancerFindsComponents) {
  const auto cat = synth_catalog();
  ProbVolume p(6, 6, 6);
  for (std::size_t i = 0; i < p.pixels(); ++i) p.at(i, 0) = 1.0;
  const auto put = [&](const BinaryMask& m, int c, double conf) {
    for (std::size_t i = 0; i < m.pixels(); ++i) {
      if (!m.test(i)) continue;
      for (int k = 0; k < 6; ++k) p.at(i, k) = (1.0 - conf) / 5.0;
      p.at(i, c) = conf;
    }
  };
  put(rect_mask(6, 6, 0, 0, 2, 2), 3, 0.9);  // 4 px
  put(rect_mask(6, 6, 2, 0, 2, 2), 4, 0.7);  // touches the first but another class
  put(rect_mask(6, 6, 5, 5, 1, 1), 3, 0.9);  // below min area
  const auto s = instancer(p, cat, 3);
  ASSERT_EQ(s.records.size(), 2u);
  EXPECT_EQ(s.records[0].class_id, 3);
  EXPECT_NEAR(s.records[0].score, 0.9, 1e-12);
  EXPECT_EQ(s.records[1].class_id, 4);
  EXPECT_EQ(s.records[1].mask.count(), 4u);
  EXPECT_EQ(s.provenance, Provenance::predicted);
}

TEST(Model, InstanceCeMatchesFiniteDifferences) {
  const auto cat = synth_catalog();
  SeededRng rng(9);
  for (int t = 0; t < 20; ++t) {
    const auto logits = testing::random_logits(5, 5, 6, rng);
    InstanceSet sup;
    sup.records = {make_record(1, 3, 1.0, rect_mask(5, 5, 0, 0, 2, 2)),
                   make_record(2, 5, 1.0, rect_mask(5, 5, 3, 2, 2, 3))};
    const auto vm = t % 2 ? testing::random_mask(5, 5, rng, 0.2) : BinaryMask{};
    const auto f = [&](const std::vector<double>& z) {
      LogitVolume l = logits;
      l.data = z;
      return instance_ce(softmax(l), sup, vm, cat).value;
    };
    // the loss gradient is wrt logits of a softmax head
    const auto g = instance_ce(softmax(logits), sup, vm, cat).grad;
    EXPECT_LE(testing::relative_error(g, testing::central_diff(f, logits.data)), 1e-4) << t;
  }
}

TEST(Model, BackwardMatchesFiniteDifferences) {
  SeededRng rng(10);
  const auto img = testing::random_image(4, 4, rng);
  const auto x = pixel_features(img);
  ToyModel m(6, 8);
  m.init_random(rng, 0.5);
  for (auto& v : m.params.values) v += 0.1 * rng.normal();  // non-zero biases too
  const auto y = testing::random_labels(4, 4, 6, rng, 0.0);
  const auto f = [&](const std::vector<double>& w) {
    ToyModel mm = m;
    mm.params.values = w;
    return semantic_ce(forward(mm, x).probs, y).value;
  };
  const auto fw = forward(m, x);
  std::vector<double> g(m.size(), 0.0);
  backward(m, x, fw, semantic_ce(fw.probs, y).grad, {}, g);
  EXPECT_LE(testing::relative_error(g, testing::central_diff(f, m.params.values)), 1e-4);
}

TEST(Train, ZeroIterationsReturnsInitialModel) {
  auto cfg = tiny_config();
  cfg.iterations = 0;
  const auto r = train(cfg);
  ToyModel init(6, cfg.embed_dims);
  SeededRng rng(derive_seed(cfg.seed, 0));
  init.init_random(rng, cfg.init_scale);
  EXPECT_EQ(r.student.params, init.params);
  EXPECT_EQ(r.teacher.params, init.params);
  EXPECT_TRUE(r.trace.empty());
}

TEST(Train, AlphaZeroTeacherTracksStudent) {
  auto cfg = tiny_config();
  cfg.ema_alpha = 0.0;
  const auto r = train(cfg);
  EXPECT_EQ(r.teacher.params, r.student.params);
  ASSERT_FALSE(r.trace.empty());
  for (const auto& e : r.trace) EXPECT_EQ(e.teacher_gap, 0.0);
}

TEST(Train, TraceIsDeterministic) {
  const auto cfg = tiny_config();
  const auto a = train(cfg);
  const auto b = train(cfg);
  EXPECT_EQ(a.trace, b.trace);
  EXPECT_EQ(a.losses, b.losses);
  EXPECT_EQ(a.student.params, b.student.params);
  ASSERT_EQ(a.trace.size(), 4u);
  EXPECT_EQ(a.trace.back().iteration, 80);
  EXPECT_GT(a.imix_steps, 0);
}

TEST(Train, TauOneMatchesImixDisabled) {
  auto cfg = tiny_config();
  const auto pools = make_pools(cfg);
  cfg.tau = 1.0;
  const auto gated = train(cfg, pools);
  cfg.imix = false;
  const auto off = train(cfg, pools);
  EXPECT_EQ(gated.imix_steps, 0);
  EXPECT_EQ(gated.trace, off.trace);
  EXPECT_EQ(gated.losses, off.losses);
  EXPECT_EQ(gated.student.params, off.student.params);
}

TEST(Train, TauZeroMixesEveryEligibleStep) {
  auto cfg = tiny_config();
  cfg.tau = 0.0;
  cfg.imix_start_fraction = 0.0;
  const auto r = train(cfg);
  EXPECT_GT(r.imix_steps, 0);
  EXPECT_LE(r.imix_steps, cfg.iterations);
}

TEST(Train, ImixWaitsForWarmup) {
  auto cfg = tiny_config();
  cfg.tau = 0.0;
  cfg.imix_start_fraction = 0.75;
  const auto r = train(cfg);
  EXPECT_LE(r.imix_steps, 20);
  cfg.imix_start_fraction = 1.0;
  EXPECT_EQ(train(cfg).imix_steps, 0);
}

TEST(Train, HugeLearningRateDiverges) {
  auto cfg = tiny_config();
  cfg.learning_rate = 1e12;
  EXPECT_THROW(train(cfg), DivergenceError);
}

TEST(Train, InvalidConfigThrows) {
  auto cfg = tiny_config();
  cfg.imix_start_fraction = 1.5;
  EXPECT_THROW(train(cfg), ValidationError);
  cfg = tiny_config();
  cfg.embed_dims = 3;
  EXPECT_THROW(train(cfg), ValidationError);
}

TEST(Train, LearnsTheSourceDomain) {
  auto cfg = tiny_config();
  cfg.iterations = 300;
  cfg.target_shift = {};
  const auto r = train(cfg);
  EXPECT_GT(r.trace.back().metrics.miou, 0.9);
}

TEST(Train, NoDomainGapKeepsVariantsClose) {
  AblationGrid g;
  g.base = load_train_config(std::filesystem::path(PANMIX_SOURCE_DIR) /
                             "configs/synthlab_default.cfg");
  g.base.iterations = 600;
  g.base.target_shift = {};
  g.variants = expand_variants({Module::baseline, Module::imix, Module::cda},
                               {MixDirection::target_to_source}, {g.base.tau});
  const auto rep = run_ablation(g, default_jobs());
  for (std::size_t s = 0; s < g.seeds.size(); ++s) {
    const double base = rep.variants[0].rows[s].metrics.mpq;
    for (std::size_t v = 1; v < rep.variants.size(); ++v)
      EXPECT_LT(std::abs(rep.variants[v].rows[s].metrics.mpq - base), 0.02)
          << rep.variants[v].variant.name() << " seed " << g.seeds[s];
  }
}

TEST(Config, DefaultFileParses) {
  const auto path = std::filesystem::path(PANMIX_SOURCE_DIR) / "configs/synthlab_default.cfg";
  const auto cfg = load_train_config(path);
  EXPECT_EQ(cfg.iterations, 1500);
  EXPECT_EQ(cfg.ema_alpha, 0.99);
  EXPECT_EQ(cfg.target_shift.hue_degrees, 45.0);
  EXPECT_EQ(cfg.direction, MixDirection::target_to_source);
}

TEST(Config, FormatThenParseRoundTrips) {
  TrainConfig c;
  c.seed = 123456789012345ULL;
  c.learning_rate = 0.1 + 0.2;
  c.direction = MixDirection::source_to_target;
  c.cda = true;
  c.target_shift.noise_sigma = 1.0 / 3.0;
  const auto back = parse_train_config(format_train_config(c));
  EXPECT_EQ(format_train_config(back), format_train_config(c));
  EXPECT_EQ(back.learning_rate, c.learning_rate);
  EXPECT_EQ(back.target_shift, c.target_shift);
  EXPECT_EQ(back.seed, c.seed);
}

TEST(Config, CommentsAndBlankLines) {
  const auto c = parse_train_config("# header\n\n  iterations = 12   # trailing\nimix=false\n");
  EXPECT_EQ(c.iterations, 12);
  EXPECT_FALSE(c.imix);
}

TEST(Config, ErrorsNameTheLine) {
  const auto message = [](const std::string& text) {
    try {
      parse_train_config(text);
    } catch (const ValidationError& e) {
      return std::string(e.what());
    }
    return std::string();
  };
  EXPECT_EQ(message("iterations = 3\nbogus = 1\n"), "line 2: unknown key 'bogus'");
  EXPECT_EQ(message("tau = high\n"), "line 1: bad value 'high' for tau");
  EXPECT_EQ(message("\nimix\n"), "line 2: expected key = value, got 'imix'");
  EXPECT_EQ(message("tau = 0.1\ntau = 0.2\n"),
            "line 2: duplicate key 'tau' (first set on line 1)");
  EXPECT_EQ(message("cda = maybe\n"), "line 1: expected true or false for cda, got 'maybe'");
  EXPECT_NE(message("direction = sideways\n").find("line 1: unknown mixing direction"),
            std::string::npos);
  EXPECT_NE(message("tau = 2\n").find("tau outside"), std::string::npos);
  EXPECT_EQ(message("iterations = 5\n"), "");
}

TEST(Ablation, GridExpansion) {
  const auto g = parse_grid(
      "seeds = 4, 5\nvariants = baseline, imix, cda, both\ndirections = t2s,s2t\n"
      "taus = 0.5,1\niterations = 7\n");
  EXPECT_EQ(g.seeds, (std::vector<std::uint64_t>{4, 5}));
  EXPECT_EQ(g.base.iterations, 7);
  // baseline + cda once each, imix and both over 2 directions x 2 taus
  ASSERT_EQ(g.variants.size(), 10u);
  EXPECT_EQ(g.variants[0].name(), "baseline");
  EXPECT_EQ(g.variants[1].name(), "imix t2s tau=0.5");
  EXPECT_EQ(g.variants[4].name(), "imix s2t tau=1");
  EXPECT_EQ(g.variants[5].name(), "cda");
  EXPECT_THROW(parse_grid("variants = imix,turbo\n"), ValidationError);
  EXPECT_THROW(parse_grid("taus = 1.5\n"), ValidationError);
  EXPECT_THROW(parse_grid("seeds = \n"), ValidationError);
  EXPECT_THROW(parse_grid("nonsense = 1\n"), ValidationError);
}

TEST(Ablation, SummaryUsesSampleStd) {
  std::vector<AblationRow> rows(3);
  rows[0].metrics.map = 0.1;
  rows[1].metrics.map = 0.2;
  rows[2].metrics.map = 0.6;
  const auto [mean, sd] = summarize(rows);
  EXPECT_NEAR(mean.map, 0.3, 1e-15);
  // deviations -0.2, -0.1, 0.3 -> squares sum 0.14, over n-1 = 2
  EXPECT_NEAR(sd.map, std::sqrt(0.07), 1e-15);
  EXPECT_EQ(sd.miou, 0.0);
  EXPECT_EQ(summarize({rows[0]}).second.map, 0.0);
}

TEST(Ablation, SingleVariantThreeSeeds) {
  AblationGrid g;
  g.base = tiny_config();
  g.variants = {Variant{Module::imix, MixDirection::target_to_source, 0.3}};
  const auto rep = run_ablation(g, 1);
  ASSERT_EQ(rep.variants.size(), 1u);
  ASSERT_EQ(rep.variants[0].rows.size(), 3u);
  const auto text = ablation_text(rep);
  // header, three seeds, one mean row
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 5);
  EXPECT_NE(text.find("mean"), std::string::npos);
  const auto j = nlohmann::json::parse(ablation_json(rep));
  EXPECT_EQ(j["variants"][0]["rows"].size(), 3u);
  EXPECT_EQ(j["variants"][0]["direction"], "t2s");
}

TEST(Ablation, TauOneEqualsBaselineAndJobsDoNotMatter) {
  AblationGrid g;
  g.base = tiny_config();
  g.seeds = {1, 2};
  g.variants = {Variant{Module::baseline}, Variant{Module::imix, MixDirection::target_to_source, 1.0}};
  const auto a = run_ablation(g, 1);
  const auto b = run_ablation(g, 3);
  for (std::size_t s = 0; s < 2; ++s) {
    EXPECT_EQ(a.variants[0].rows[s].metrics, a.variants[1].rows[s].metrics);
    EXPECT_EQ(a.variants[1].rows[s].imix_steps, 0);
  }
  EXPECT_EQ(ablation_json(a), ablation_json(b));
}

}  // namespace
}  // namespace panmix::synthlab
