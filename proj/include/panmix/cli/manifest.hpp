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


// Dataset manifests: a JSON list of per-image artifacts.
//
//   {"domain": "source",
//    "records": [{"image": "a.png", "label": "a_pan.png",
//                 "probs": null, "instances": null}]}
//
// Relative paths resolve against the manifest's directory. A panoptic label
// "x.png" is read together with its sidecar "x.json".

#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "panmix/core/binary_io.hpp"
#include "panmix/core/files.hpp"
#include "panmix/core/instance_io.hpp"
#include "panmix/core/panoptic_io.hpp"
#include "panmix/core/png.hpp"

namespace panmix::cli {

namespace fs = std::filesystem;

struct ManifestRecord {
  fs::path image;
  std::optional<fs::path> label, probs, instances;
};

struct Manifest {
  std::string domain;  // source | target
  std::vector<ManifestRecord> records;
};

inline fs::path sidecar_path(const fs::path& png) {
  fs::path p = png;
  return p.replace_extension(".json");
}

inline void require_file(const fs::path& p) {
  if (!fs::is_regular_file(p)) throw IoError("missing file: " + p.string());
}

inline Manifest load_manifest(const fs::path& path) {
  const auto text = read_text(path);
  const fs::path base = path.parent_path();
  Manifest m;
  try {
    const auto j = nlohmann::json::parse(text);
    m.domain = j.at("domain").get<std::string>();
    if (m.domain != "source" && m.domain != "target")
      throw ValidationError(path.string() + ": domain must be source or target, got '" +
                            m.domain + "'");
    const auto opt = [&](const nlohmann::json& r, const char* key) -> std::optional<fs::path> {
      if (!r.contains(key) || r[key].is_null()) return std::nullopt;
      return base / r[key].get<std::string>();
    };
    for (const auto& r : j.at("records")) {
      ManifestRecord rec{base / r.at("image").get<std::string>(), opt(r, "label"),
                         opt(r, "probs"), opt(r, "instances")};
      m.records.push_back(std::move(rec));
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
  for (const auto& r : m.records) {
    require_file(r.image);
    if (r.label) {
      require_file(*r.label);
      require_file(sidecar_path(*r.label));
    }
    if (r.probs) require_file(*r.probs);
    if (r.instances) require_file(*r.instances);
  }
  return m;
}

inline std::string manifest_json(const Manifest& m, const fs::path& relative_to) {
  nlohmann::ordered_json j;
  j["domain"] = m.domain;
  j["records"] = nlohmann::ordered_json::array();
  const auto rel = [&](const std::optional<fs::path>& p) -> nlohmann::ordered_json {
    if (!p) return nullptr;
    return p->lexically_relative(relative_to).generic_string();
  };
  for (const auto& r : m.records)
    j["records"].push_back({{"image", rel(r.image)},
                            {"label", rel(r.label)},
                            {"probs", rel(r.probs)},
                            {"instances", rel(r.instances)}});
  return j.dump(2) + "\n";
}

inline ImageRGB load_image(const fs::path& p) {
  try {
    return decode_png(read_file(p));
  } catch (const FormatError& e) {
    throw FormatError(p.string() + ": " + e.what());
  }
}

inline PanopticLabel load_panoptic(const fs::path& png, const ClassCatalog& cat) {
  const auto side = sidecar_path(png);
  require_file(png);
  require_file(side);
  try {
    return decode_panoptic(read_file(png), read_text(side), cat);
  } catch (const ValidationError& e) {
    throw ValidationError(png.string() + ": " + e.what());
  }
}

inline void save_panoptic(const fs::path& png, const PanopticLabel& label,
                          const ClassCatalog& cat) {
  const auto enc = encode_panoptic(label, cat);
  write_file_atomic(png, enc.png);
  write_file_atomic(sidecar_path(png), enc.sidecar);
}

inline ProbVolume load_probs(const fs::path& p) {
  try {
    return to_probs(read_volume(read_file(p)));
  } catch (const ValidationError& e) {
    throw ValidationError(p.string() + ": " + e.what());
  }
}

inline InstanceSet load_instances(const fs::path& p) {
  try {
    return read_instances_jsonl(read_text(p));
  } catch (const ValidationError& e) {
    throw ValidationError(p.string() + ": " + e.what());
  }
}

inline void require_dims(const fs::path& what, int h, int w, int h2, int w2) {
  if (h != h2 || w != w2)
    throw ValidationError(what.string() + ": " + std::to_string(h2) + "x" + std::to_string(w2) +
                          " does not match the image (" + std::to_string(h) + "x" +
                          std::to_string(w) + ")");
}

}  // namespace panmix::cli
