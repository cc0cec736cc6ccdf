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

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "panmix/core/check.hpp"
#include "panmix/core/png.hpp"
#include "panmix/core/types.hpp"

namespace panmix {

// Panoptic labels are stored as a 24-bit id PNG plus a JSON sidecar.
//
//   id = 0                         IGNORE
//   id = class * 1000              stuff segment of `class`
//   id = class * 1000 + ordinal    ordinal-th instance (1-based) of a thing class
//
// Stuff class 0 would collide with the IGNORE code, so it is written as id 1;
// ordinal 1 of a stuff class is otherwise unused.
inline constexpr std::uint32_t kMaxInstancesPerClass = 999;

inline std::uint32_t stuff_segment_id(ClassId c) {
  return c == 0 ? 1u : static_cast<std::uint32_t>(c) * 1000u;
}

struct EncodedPanoptic {
  std::vector<std::uint8_t> png;
  std::string sidecar;
};

inline const char* provenance_name(Provenance p) {
  switch (p) {
    case Provenance::ground_truth: return "ground_truth";
    case Provenance::predicted: return "predicted";
    case Provenance::mixed: return "mixed";
  }
  return "ground_truth";
}

inline Provenance parse_provenance(const std::string& s) {
  if (s == "ground_truth") return Provenance::ground_truth;
  if (s == "predicted") return Provenance::predicted;
  if (s == "mixed") return Provenance::mixed;
  throw FormatError("unknown provenance '" + s + "'");
}

inline EncodedPanoptic encode_panoptic(const PanopticLabel& label,
                                       const ClassCatalog& catalog) {
  validate_panoptic(label, catalog);
  const auto& sem = label.semantic;
  std::vector<std::uint32_t> ids(sem.pixels(), 0);

  std::vector<bool> stuff_present(catalog.size(), false);
  for (std::size_t i = 0; i < sem.pixels(); ++i)
    if (sem[i] != kIgnore) {
      ids[i] = stuff_segment_id(sem[i]);
      if (catalog.is_stuff(sem[i])) stuff_present[sem[i]] = true;
    }

  nlohmann::ordered_json segments = nlohmann::ordered_json::array();
  for (std::size_t c = 0; c < catalog.size(); ++c)
    if (stuff_present[c])
      segments.push_back({{"id", stuff_segment_id(static_cast<ClassId>(c))},
                          {"class_id", c},
                          {"isthing", false},
                          {"score", 1.0}});

  std::map<ClassId, std::uint32_t> ordinal;
  for (const auto& r : label.instances.records) {
    const std::uint32_t k = ++ordinal[r.class_id];
    if (k > kMaxInstancesPerClass)
      throw ValidationError("panoptic encode: more than 999 instances of class " +
                            std::to_string(r.class_id));
    const std::uint32_t id = static_cast<std::uint32_t>(r.class_id) * 1000u + k;
    for (std::size_t i = 0; i < ids.size(); ++i)
      if (r.mask.test(i)) ids[i] = id;
    segments.push_back({{"id", id},
                        {"class_id", r.class_id},
                        {"isthing", true},
                        {"instance_id", r.id},
                        {"score", r.score}});
  }

  nlohmann::ordered_json side;
  side["format"] = "panmix-panoptic-v1";
  side["height"] = sem.height;
  side["width"] = sem.width;
  side["provenance"] = provenance_name(label.instances.provenance);
  side["segments"] = std::move(segments);

  return {encode_png(ids_to_rgb(sem.height, sem.width, ids)), side.dump(2) + "\n"};
}

inline PanopticLabel decode_panoptic(std::span<const std::uint8_t> png,
                                     const std::string& sidecar,
                                     const ClassCatalog& catalog) {
  nlohmann::json side;
  try {
    side = nlohmann::json::parse(sidecar);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("panoptic sidecar: ") + e.what());
  }
  const ImageRGB img = decode_png(png);
  const auto ids = rgb_to_ids(img);

  struct Segment {
    ClassId class_id;
    bool isthing;
    InstanceId instance_id;
    double score;
    std::size_t pixels = 0;
  };
  std::map<std::uint32_t, Segment> segs;
  std::vector<std::uint32_t> thing_order;
  Provenance provenance = Provenance::ground_truth;
  try {
    if (side.at("height").get<int>() != img.height ||
        side.at("width").get<int>() != img.width)
      throw FormatError("panoptic decode: sidecar dimensions differ from png");
    if (side.contains("provenance"))
      provenance = parse_provenance(side["provenance"].get<std::string>());
    for (const auto& s : side.at("segments")) {
      const auto id = s.at("id").get<std::uint32_t>();
      const auto cls = s.at("class_id").get<std::uint32_t>();
      const bool isthing = s.at("isthing").get<bool>();
      if (cls >= catalog.size())
        throw FormatError("panoptic decode: segment " + std::to_string(id) +
                          " references unknown class " + std::to_string(cls));
      const auto c = static_cast<ClassId>(cls);
      if (isthing != catalog.is_thing(c))
        throw FormatError("panoptic decode: segment " + std::to_string(id) +
                          " thing flag disagrees with catalog");
      const bool id_ok = isthing ? (id / 1000 == cls && id % 1000 >= 1)
                                 : id == stuff_segment_id(c);
      if (!id_ok)
        throw FormatError("panoptic decode: segment id " + std::to_string(id) +
                          " inconsistent with class " + std::to_string(cls));
      Segment seg{c, isthing, 0, s.value("score", 1.0)};
      if (isthing) seg.instance_id = s.at("instance_id").get<InstanceId>();
      if (!segs.emplace(id, seg).second)
        throw FormatError("panoptic decode: duplicate segment id " + std::to_string(id));
      if (isthing) thing_order.push_back(id);
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("panoptic sidecar: ") + e.what());
  }

  PanopticLabel label;
  label.semantic = LabelMap2D(img.height, img.width, kIgnore);
  label.instances.provenance = provenance;
  std::map<std::uint32_t, BinaryMask> masks;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] == 0) continue;
    auto it = segs.find(ids[i]);
    if (it == segs.end())
      throw FormatError("panoptic decode: pixel id " + std::to_string(ids[i]) +
                        " missing from sidecar");
    ++it->second.pixels;
    label.semantic[i] = it->second.class_id;
    if (it->second.isthing) {
      auto& m = masks[ids[i]];
      if (m.bits.empty()) m = BinaryMask(img.height, img.width);
      m.set(i);
    }
  }
  for (const auto& [id, seg] : segs)
    if (seg.pixels == 0)
      throw FormatError("panoptic decode: segment " + std::to_string(id) +
                        " has no pixels");
  for (auto id : thing_order) {
    const auto& seg = segs.at(id);
    label.instances.records.push_back(
        make_record(seg.instance_id, seg.class_id, seg.score, std::move(masks[id])));
  }
  validate_panoptic(label, catalog);
  return label;
}

}  // namespace panmix
