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


// Flat key = value configuration for the lab. '#' starts a comment; blank
// lines are skipped; every key may appear at most once.

#pragma once

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <string_view>
#include <system_error>
#include <utility>
#include <vector>

#include "panmix/core/files.hpp"
#include "panmix/synthlab/train.hpp"

namespace panmix::synthlab {

struct KeyValue {
  std::string key;
  std::string value;
  int line = 0;
};

namespace detail {

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

inline std::string at_line(int line, const std::string& what) {
  return "line " + std::to_string(line) + ": " + what;
}

template <class T>
T parse_number(const KeyValue& kv) {
  T v{};
  const char* b = kv.value.data();
  const char* e = b + kv.value.size();
  const auto [p, ec] = std::from_chars(b, e, v);
  if (ec != std::errc() || p != e || kv.value.empty())
    throw ValidationError(at_line(kv.line, "bad value '" + kv.value + "' for " + kv.key));
  return v;
}

inline bool parse_bool(const KeyValue& kv) {
  if (kv.value == "true" || kv.value == "1") return true;
  if (kv.value == "false" || kv.value == "0") return false;
  throw ValidationError(at_line(kv.line, "expected true or false for " + kv.key + ", got '" +
                                             kv.value + "'"));
}

inline std::string format_double(double v) {
  char buf[64];
  const auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, p);
}

}  // namespace detail

inline const char* direction_name(MixDirection d) {
  return d == MixDirection::target_to_source ? "t2s" : "s2t";
}

inline MixDirection parse_direction(const std::string& s) {
  if (s == "t2s") return MixDirection::target_to_source;
  if (s == "s2t") return MixDirection::source_to_target;
  throw ValidationError("unknown mixing direction '" + s + "' (expected t2s or s2t)");
}

inline std::vector<KeyValue> parse_key_values(const std::string& text) {
  std::vector<KeyValue> out;
  std::map<std::string, int> seen;
  int line = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    std::string raw = text.substr(pos, nl == std::string::npos ? std::string::npos : nl - pos);
    pos = nl == std::string::npos ? text.size() + 1 : nl + 1;
    ++line;
    if (const auto hash = raw.find('#'); hash != std::string::npos) raw.resize(hash);
    const auto body = detail::trim(raw);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos)
      throw ValidationError(detail::at_line(line, "expected key = value, got '" + body + "'"));
    KeyValue kv{detail::trim(std::string_view(body).substr(0, eq)),
                detail::trim(std::string_view(body).substr(eq + 1)), line};
    if (kv.key.empty()) throw ValidationError(detail::at_line(line, "empty key"));
    if (auto [it, fresh] = seen.emplace(kv.key, line); !fresh)
      throw ValidationError(detail::at_line(line, "duplicate key '" + kv.key +
                                                      "' (first set on line " +
                                                      std::to_string(it->second) + ")"));
    out.push_back(std::move(kv));
  }
  return out;
}

// Applies one setting. Returns false when the key is not a TrainConfig key.
inline bool apply_setting(TrainConfig& cfg, const KeyValue& kv) {
  using detail::parse_bool;
  using detail::parse_number;
  static const std::map<std::string, std::function<void(TrainConfig&, const KeyValue&)>> table = {
      {"seed", [](auto& c, auto& v) { c.seed = parse_number<std::uint64_t>(v); }},
      {"iterations", [](auto& c, auto& v) { c.iterations = parse_number<int>(v); }},
      {"learning_rate", [](auto& c, auto& v) { c.learning_rate = parse_number<double>(v); }},
      {"ema_alpha", [](auto& c, auto& v) { c.ema_alpha = parse_number<double>(v); }},
      {"tau", [](auto& c, auto& v) { c.tau = parse_number<double>(v); }},
      {"imix", [](auto& c, auto& v) { c.imix = parse_bool(v); }},
      {"imix_start_fraction",
       [](auto& c, auto& v) { c.imix_start_fraction = parse_number<double>(v); }},
      {"direction",
       [](auto& c, auto& v) {
         try {
           c.direction = parse_direction(v.value);
         } catch (const ValidationError& e) {
           throw ValidationError(detail::at_line(v.line, e.what()));
         }
       }},
      {"cda", [](auto& c, auto& v) { c.cda = parse_bool(v); }},
      {"cda_weight", [](auto& c, auto& v) { c.cda_weight = parse_number<double>(v); }},
      {"pseudo_confidence",
       [](auto& c, auto& v) { c.pseudo_confidence = parse_number<double>(v); }},
      {"occlusion_eps", [](auto& c, auto& v) { c.occlusion_eps = parse_number<double>(v); }},
      {"eval_every", [](auto& c, auto& v) { c.eval_every = parse_number<int>(v); }},
      {"source_pool", [](auto& c, auto& v) { c.source_pool = parse_number<int>(v); }},
      {"target_pool", [](auto& c, auto& v) { c.target_pool = parse_number<int>(v); }},
      {"eval_images", [](auto& c, auto& v) { c.eval_images = parse_number<int>(v); }},
      {"embed_dims", [](auto& c, auto& v) { c.embed_dims = parse_number<int>(v); }},
      {"init_scale", [](auto& c, auto& v) { c.init_scale = parse_number<double>(v); }},
      {"min_component_area",
       [](auto& c, auto& v) { c.min_component_area = parse_number<int>(v); }},
      {"fusion_floor", [](auto& c, auto& v) { c.fusion_floor = parse_number<double>(v); }},
      {"height", [](auto& c, auto& v) { c.source.height = parse_number<int>(v); }},
      {"width", [](auto& c, auto& v) { c.source.width = parse_number<int>(v); }},
      {"min_shapes", [](auto& c, auto& v) { c.source.min_shapes = parse_number<int>(v); }},
      {"max_shapes", [](auto& c, auto& v) { c.source.max_shapes = parse_number<int>(v); }},
      {"color_jitter", [](auto& c, auto& v) { c.source.color_jitter = parse_number<double>(v); }},
      {"hue_degrees", [](auto& c, auto& v) { c.target_shift.hue_degrees = parse_number<double>(v); }},
      {"fog_alpha", [](auto& c, auto& v) { c.target_shift.fog_alpha = parse_number<double>(v); }},
      {"noise_sigma",
       [](auto& c, auto& v) { c.target_shift.noise_sigma = parse_number<double>(v); }},
  };
  const auto it = table.find(kv.key);
  if (it == table.end()) return false;
  it->second(cfg, kv);
  return true;
}

// Parses a config on top of `base`. Unknown keys are errors; the result is
// validated.
inline TrainConfig parse_train_config(const std::string& text, TrainConfig base = {}) {
  for (const auto& kv : parse_key_values(text))
    if (!apply_setting(base, kv))
      throw ValidationError(detail::at_line(kv.line, "unknown key '" + kv.key + "'"));
  base.validate();
  return base;
}

inline TrainConfig load_train_config(const std::filesystem::path& path) {
  try {
    return parse_train_config(read_text(path));
  } catch (const ValidationError& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

// Every key, in documentation order. Parsing the output gives back `cfg`.
inline std::vector<std::pair<std::string, std::string>> config_entries(const TrainConfig& cfg) {
  using detail::format_double;
  const auto b = [](bool v) { return std::string(v ? "true" : "false"); };
  const auto i = [](auto v) { return std::to_string(v); };
  return {{"seed", i(cfg.seed)},
          {"iterations", i(cfg.iterations)},
          {"learning_rate", format_double(cfg.learning_rate)},
          {"ema_alpha", format_double(cfg.ema_alpha)},
          {"tau", format_double(cfg.tau)},
          {"imix", b(cfg.imix)},
          {"imix_start_fraction", format_double(cfg.imix_start_fraction)},
          {"direction", direction_name(cfg.direction)},
          {"cda", b(cfg.cda)},
          {"cda_weight", format_double(cfg.cda_weight)},
          {"pseudo_confidence", format_double(cfg.pseudo_confidence)},
          {"occlusion_eps", format_double(cfg.occlusion_eps)},
          {"eval_every", i(cfg.eval_every)},
          {"source_pool", i(cfg.source_pool)},
          {"target_pool", i(cfg.target_pool)},
          {"eval_images", i(cfg.eval_images)},
          {"embed_dims", i(cfg.embed_dims)},
          {"init_scale", format_double(cfg.init_scale)},
          {"min_component_area", i(cfg.min_component_area)},
          {"fusion_floor", format_double(cfg.fusion_floor)},
          {"height", i(cfg.source.height)},
          {"width", i(cfg.source.width)},
          {"min_shapes", i(cfg.source.min_shapes)},
          {"max_shapes", i(cfg.source.max_shapes)},
          {"color_jitter", format_double(cfg.source.color_jitter)},
          {"hue_degrees", format_double(cfg.target_shift.hue_degrees)},
          {"fog_alpha", format_double(cfg.target_shift.fog_alpha)},
          {"noise_sigma", format_double(cfg.target_shift.noise_sigma)}};
}

inline std::string format_train_config(const TrainConfig& cfg) {
  std::string out;
  for (const auto& [k, v] : config_entries(cfg)) out += k + " = " + v + "\n";
  return out;
}

}  // namespace panmix::synthlab
