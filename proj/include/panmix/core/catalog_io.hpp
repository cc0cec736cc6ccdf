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

#include <string>
#include <vector>

#include <json.hpp>

#include "panmix/core/types.hpp"

namespace panmix {

// {"classes": [{"name": "road", "thing": false}, ...]}
inline ClassCatalog parse_catalog(const std::string& text) {
  try {
    const auto j = nlohmann::json::parse(text);
    std::vector<std::string> names;
    std::vector<bool> thing;
    for (const auto& c : j.at("classes")) {
      names.push_back(c.at("name").get<std::string>());
      thing.push_back(c.at("thing").get<bool>());
    }
    return ClassCatalog(std::move(names), std::move(thing));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("catalog: ") + e.what());
  }
}

inline std::string catalog_to_json(const ClassCatalog& catalog) {
  nlohmann::ordered_json j;
  j["classes"] = nlohmann::ordered_json::array();
  for (std::size_t c = 0; c < catalog.size(); ++c)
    j["classes"].push_back({{"name", catalog.names()[c]},
                            {"thing", static_cast<bool>(catalog.thing_flags()[c])}});
  return j.dump(2) + "\n";
}

}  // namespace panmix
