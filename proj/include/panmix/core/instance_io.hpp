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
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "panmix/core/rle.hpp"
#include "panmix/core/types.hpp"

namespace panmix {

// Instance predictions as JSON lines, one record per line:
//   {"id":1,"class_id":12,"score":0.93,"rle":[...],"H":64,"W":64}
// Boxes are not stored; they are recomputed from the mask.
inline std::string write_instances_jsonl(const InstanceSet& set) {
  std::string out;
  for (const auto& r : set.records) {
    nlohmann::ordered_json j;
    j["id"] = r.id;
    j["class_id"] = r.class_id;
    j["score"] = r.score;
    j["rle"] = rle_encode(r.mask);
    j["H"] = r.mask.height;
    j["W"] = r.mask.width;
    out += j.dump();
    out += '\n';
  }
  return out;
}

inline InstanceSet read_instances_jsonl(const std::string& text,
                                        Provenance provenance = Provenance::predicted) {
  InstanceSet set;
  set.provenance = provenance;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      const auto runs = j.at("rle").get<std::vector<std::uint32_t>>();
      auto mask = rle_decode(runs, j.at("H").get<int>(), j.at("W").get<int>());
      const double score = j.at("score").get<double>();
      if (!(score >= 0.0 && score <= 1.0))
        throw FormatError("score outside [0,1]");
      set.records.push_back(make_record(j.at("id").get<InstanceId>(),
                                        j.at("class_id").get<ClassId>(), score,
                                        std::move(mask)));
    } catch (const nlohmann::json::exception& e) {
      throw FormatError("instances line " + std::to_string(lineno) + ": " + e.what());
    } catch (const FormatError& e) {
      throw FormatError("instances line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return set;
}

}  // namespace panmix
