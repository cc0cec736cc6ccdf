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

#include <optional>
#include <set>
#include <string>
#include <vector>

#include "panmix/core/types.hpp"

namespace panmix {

// Checks one record against the frame size and catalog. Returns a
// description of the first violation.
inline std::optional<std::string> check_record(const InstanceRecord& r, int height,
                                               int width, const ClassCatalog& catalog,
                                               Provenance provenance) {
  const std::string who = "instance " + std::to_string(r.id);
  if (r.id == 0) return who + ": id must be positive";
  if (r.mask.height != height || r.mask.width != width ||
      r.mask.bits.size() != r.mask.pixels())
    return who + ": mask shape differs from the frame";
  if (r.mask.empty()) return who + ": empty mask";
  if (!(r.box == tight_box(r.mask))) return who + ": box is not the tight mask bounds";
  if (!catalog.is_thing(r.class_id)) return who + ": class is not a thing class";
  if (!(r.score >= 0.0 && r.score <= 1.0)) return who + ": score outside [0,1]";
  if (provenance == Provenance::ground_truth && r.score != 1.0)
    return who + ": ground-truth score must be exactly 1";
  return std::nullopt;
}

// Checks every InstanceSet invariant. Masks must be pairwise disjoint for
// ground-truth and mixed provenance.
inline std::optional<std::string> check_instances(const InstanceSet& set, int height,
                                                  int width,
                                                  const ClassCatalog& catalog) {
  std::set<InstanceId> ids;
  for (const auto& r : set.records) {
    if (auto err = check_record(r, height, width, catalog, set.provenance)) return err;
    if (!ids.insert(r.id).second) return "duplicate instance id " + std::to_string(r.id);
  }
  if (set.provenance != Provenance::predicted) {
    std::vector<InstanceId> owner(static_cast<std::size_t>(height) * width, 0);
    for (const auto& r : set.records)
      for (std::size_t i = 0; i < owner.size(); ++i)
        if (r.mask.test(i)) {
          if (owner[i] != 0)
            return "instances " + std::to_string(owner[i]) + " and " +
                   std::to_string(r.id) + " overlap";
          owner[i] = r.id;
        }
  }
  return std::nullopt;
}

// Full panoptic consistency: semantic values in range, disjoint instances,
// instance pixels agree with the semantic map, and every thing pixel is
// covered by exactly one instance or is IGNORE.
inline std::optional<std::string> check_panoptic(const PanopticLabel& label,
                                                 const ClassCatalog& catalog) {
  const auto& sem = label.semantic;
  if (sem.values.size() != sem.pixels()) return "semantic map size mismatch";
  for (std::size_t i = 0; i < sem.pixels(); ++i)
    if (sem[i] != kIgnore && !catalog.contains(sem[i]))
      return "pixel " + std::to_string(i) + ": class out of range";

  std::set<InstanceId> ids;
  std::vector<const InstanceRecord*> owner(sem.pixels(), nullptr);
  for (const auto& r : label.instances.records) {
    if (auto err = check_record(r, sem.height, sem.width, catalog,
                                label.instances.provenance))
      return err;
    if (!ids.insert(r.id).second) return "duplicate instance id " + std::to_string(r.id);
    for (std::size_t i = 0; i < owner.size(); ++i) {
      if (!r.mask.test(i)) continue;
      if (owner[i] != nullptr)
        return "instances " + std::to_string(owner[i]->id) + " and " +
               std::to_string(r.id) + " overlap";
      owner[i] = &r;
      if (sem[i] != r.class_id)
        return "pixel " + std::to_string(i) + ": semantic class disagrees with instance " +
               std::to_string(r.id);
    }
  }
  for (std::size_t i = 0; i < sem.pixels(); ++i)
    if (sem[i] != kIgnore && catalog.is_thing(sem[i]) && owner[i] == nullptr)
      return "pixel " + std::to_string(i) + ": thing pixel without an instance";
  return std::nullopt;
}

inline void validate_panoptic(const PanopticLabel& label, const ClassCatalog& catalog) {
  if (auto err = check_panoptic(label, catalog))
    throw ValidationError("panoptic label: " + *err);
}

}  // namespace panmix
