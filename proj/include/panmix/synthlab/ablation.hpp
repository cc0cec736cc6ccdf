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


// Module, direction and threshold ablations over several seeds.

#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "panmix/core/parallel.hpp"
#include "panmix/synthlab/config.hpp"
#include "panmix/synthlab/train.hpp"

namespace panmix::synthlab {

enum class Module { baseline, imix, cda, both };

inline const char* module_name(Module m) {
  switch (m) {
    case Module::baseline: return "baseline";
    case Module::imix: return "imix";
    case Module::cda: return "cda";
    case Module::both: return "both";
  }
  return "?";
}

inline Module parse_module(const std::string& s) {
  for (Module m : {Module::baseline, Module::imix, Module::cda, Module::both})
    if (s == module_name(m)) return m;
  throw ValidationError("unknown variant '" + s + "' (expected baseline, imix, cda or both)");
}

struct Variant {
  Module module = Module::baseline;
  MixDirection direction = MixDirection::target_to_source;
  double tau = 0.75;

  bool uses_imix() const { return module == Module::imix || module == Module::both; }
  bool uses_cda() const { return module == Module::cda || module == Module::both; }

  // Direction and tau only show up for variants that mix instances.
  std::string name() const {
    std::string n = module_name(module);
    if (uses_imix()) n += " " + std::string(direction_name(direction)) + " tau=" +
                          detail::format_double(tau);
    return n;
  }

  TrainConfig apply(TrainConfig cfg) const {
    cfg.imix = uses_imix();
    cfg.cda = uses_cda();
    cfg.direction = direction;
    cfg.tau = tau;
    return cfg;
  }
};

// Cartesian product, with baseline and cda collapsed to a single entry each.
inline std::vector<Variant> expand_variants(const std::vector<Module>& modules,
                                            const std::vector<MixDirection>& directions,
                                            const std::vector<double>& taus) {
  std::vector<Variant> out;
  for (Module m : modules) {
    Variant v{m};
    if (!v.uses_imix()) {
      out.push_back(v);
      continue;
    }
    for (auto d : directions)
      for (double t : taus) out.push_back(Variant{m, d, t});
  }
  return out;
}

struct AblationGrid {
  TrainConfig base;
  std::vector<std::uint64_t> seeds{1, 2, 3};
  std::vector<Variant> variants;
};

namespace detail {

inline std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream in(s);
  std::string item;
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

}  // namespace detail

// Grid files are config files with four extra list keys:
//   seeds = 1,2,3   variants = baseline,imix,cda,both
//   directions = t2s,s2t   taus = 0.75
inline AblationGrid parse_grid(const std::string& text) {
  AblationGrid g;
  std::vector<Module> modules{Module::baseline, Module::imix, Module::cda, Module::both};
  std::vector<MixDirection> directions{MixDirection::target_to_source};
  std::vector<double> taus{g.base.tau};
  bool taus_set = false;
  for (const auto& kv : parse_key_values(text)) {
    const auto items = detail::split_list(kv.value);
    const auto fail = [&](const std::string& what) {
      throw ValidationError(detail::at_line(kv.line, what));
    };
    if (kv.key == "seeds") {
      g.seeds.clear();
      for (const auto& s : items)
        g.seeds.push_back(detail::parse_number<std::uint64_t>(KeyValue{kv.key, s, kv.line}));
    } else if (kv.key == "variants") {
      modules.clear();
      try {
        for (const auto& s : items) modules.push_back(parse_module(s));
      } catch (const ValidationError& e) {
        fail(e.what());
      }
    } else if (kv.key == "directions") {
      directions.clear();
      try {
        for (const auto& s : items) directions.push_back(parse_direction(s));
      } catch (const ValidationError& e) {
        fail(e.what());
      }
    } else if (kv.key == "taus") {
      taus.clear();
      taus_set = true;
      for (const auto& s : items) {
        const double t = detail::parse_number<double>(KeyValue{kv.key, s, kv.line});
        if (t < 0.0 || t > 1.0) fail("tau " + s + " outside [0,1]");
        taus.push_back(t);
      }
    } else if (!apply_setting(g.base, kv)) {
      fail("unknown key '" + kv.key + "'");
    }
  }
  if (!taus_set) taus = {g.base.tau};
  panmix::detail::require(!g.seeds.empty(), "grid: no seeds");
  panmix::detail::require(!modules.empty(), "grid: no variants");
  panmix::detail::require(!directions.empty(), "grid: no directions");
  panmix::detail::require(!taus.empty(), "grid: no taus");
  g.base.validate();
  g.variants = expand_variants(modules, directions, taus);
  return g;
}

struct AblationRow {
  std::uint64_t seed = 0;
  Metrics metrics;
  int imix_steps = 0;
};

struct VariantResult {
  Variant variant;
  std::vector<AblationRow> rows;
  Metrics mean;
  Metrics std;  // sample standard deviation, 0 for a single seed
};

struct AblationReport {
  TrainConfig base;
  std::vector<VariantResult> variants;
};

inline std::pair<Metrics, Metrics> summarize(const std::vector<AblationRow>& rows) {
  const auto field = [](Metrics& m, int k) -> double& {
    double* f[5] = {&m.msq, &m.mrq, &m.mpq, &m.miou, &m.map};
    return *f[k];
  };
  Metrics mean, sd;
  const double n = static_cast<double>(rows.size());
  if (rows.empty()) return {mean, sd};
  for (int k = 0; k < 5; ++k) {
    double s = 0.0;
    for (auto r : rows) s += field(r.metrics, k);
    const double mu = s / n;
    double ss = 0.0;
    for (auto r : rows) ss += (field(r.metrics, k) - mu) * (field(r.metrics, k) - mu);
    field(mean, k) = mu;
    field(sd, k) = rows.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
  }
  return {mean, sd};
}

// One training run per (variant, seed). Pools depend only on the seed and
// are built once per seed. Runs go through a pool of `jobs` workers; results
// do not depend on `jobs`.
inline AblationReport run_ablation(const AblationGrid& grid, int jobs = 1) {
  grid.base.validate();
  const std::size_t nv = grid.variants.size(), ns = grid.seeds.size();
  std::vector<DataPools> pools(ns);
  parallel_for(ns, jobs, [&](std::size_t s) {
    TrainConfig c = grid.base;
    c.seed = grid.seeds[s];
    pools[s] = make_pools(c);
  });
  std::vector<AblationRow> rows(nv * ns);
  parallel_for(nv * ns, jobs, [&](std::size_t k) {
    const std::size_t v = k / ns, s = k % ns;
    TrainConfig c = grid.variants[v].apply(grid.base);
    c.seed = grid.seeds[s];
    c.eval_every = 0;
    const auto r = train(c, pools[s]);
    rows[k] = {c.seed, r.trace.back().metrics, r.imix_steps};
  });
  AblationReport rep;
  rep.base = grid.base;
  for (std::size_t v = 0; v < nv; ++v) {
    VariantResult vr;
    vr.variant = grid.variants[v];
    vr.rows.assign(rows.begin() + static_cast<std::ptrdiff_t>(v * ns),
                   rows.begin() + static_cast<std::ptrdiff_t>((v + 1) * ns));
    std::tie(vr.mean, vr.std) = summarize(vr.rows);
    rep.variants.push_back(std::move(vr));
  }
  return rep;
}

inline double round4(double v) { return std::round(v * 1e4) / 1e4; }

inline nlohmann::ordered_json metrics_json(const Metrics& m) {
  return {{"msq", round4(m.msq)},
          {"mrq", round4(m.mrq)},
          {"mpq", round4(m.mpq)},
          {"miou", round4(m.miou)},
          {"map", round4(m.map)}};
}

inline std::string ablation_json(const AblationReport& rep) {
  nlohmann::ordered_json j;
  j["format"] = "panmix-ablation-1";
  nlohmann::ordered_json cfg = nlohmann::ordered_json::object();
  for (const auto& [k, v] : config_entries(rep.base))
    if (k != "seed" && k != "imix" && k != "cda" && k != "direction" && k != "tau") cfg[k] = v;
  j["config"] = cfg;
  j["variants"] = nlohmann::ordered_json::array();
  for (const auto& vr : rep.variants) {
    nlohmann::ordered_json v;
    v["name"] = vr.variant.name();
    v["module"] = module_name(vr.variant.module);
    v["imix"] = vr.variant.uses_imix();
    v["cda"] = vr.variant.uses_cda();
    v["direction"] = direction_name(vr.variant.direction);
    v["tau"] = vr.variant.tau;
    v["rows"] = nlohmann::ordered_json::array();
    for (const auto& r : vr.rows) {
      auto row = metrics_json(r.metrics);
      row["seed"] = r.seed;
      row["imix_steps"] = r.imix_steps;
      v["rows"].push_back(row);
    }
    v["mean"] = metrics_json(vr.mean);
    v["std"] = metrics_json(vr.std);
    j["variants"].push_back(v);
  }
  return j.dump(2) + "\n";
}

inline std::string ablation_text(const AblationReport& rep) {
  std::size_t width = 7;
  for (const auto& vr : rep.variants) width = std::max(width, vr.variant.name().size());
  const auto pad = [&](std::string s) {
    s.resize(width, ' ');
    return s;
  };
  char buf[160];
  std::snprintf(buf, sizeof buf, "  %-5s  %12s  %12s  %12s  %12s  %12s\n", "seed", "mSQ", "mRQ",
                "mPQ", "mIoU", "mAP");
  std::string out = pad("variant") + buf;
  for (const auto& vr : rep.variants) {
    for (const auto& r : vr.rows) {
      const auto& m = r.metrics;
      std::snprintf(buf, sizeof buf, "  %-5llu  %12.2f  %12.2f  %12.2f  %12.2f  %12.2f\n",
                    static_cast<unsigned long long>(r.seed), 100 * m.msq, 100 * m.mrq,
                    100 * m.mpq, 100 * m.miou, 100 * m.map);
      out += pad(vr.variant.name()) + buf;
    }
    const auto& a = vr.mean;
    const auto& d = vr.std;
    std::snprintf(buf, sizeof buf,
                  "  %-5s  %6.2f±%-5.2f  %6.2f±%-5.2f  %6.2f±%-5.2f  %6.2f±%-5.2f  "
                  "%6.2f±%-5.2f\n",
                  "mean", 100 * a.msq, 100 * d.msq, 100 * a.mrq, 100 * d.mrq, 100 * a.mpq,
                  100 * d.mpq, 100 * a.miou, 100 * d.miou, 100 * a.map, 100 * d.map);
    out += pad(vr.variant.name()) + buf;
  }
  return out;
}

}  // namespace panmix::synthlab
