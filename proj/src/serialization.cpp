// Copyright 2026 The PatchShield Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "patchshield/serialization.hpp"

#include <fstream>

#include "patchshield/error.hpp"

namespace patchshield {

using nlohmann::json;

namespace {

template <class Fn>
auto Parse(const char* what, Fn&& fn) {
  try {
    return fn();
  } catch (const json::exception& e) {
    Fail(ErrorKind::kInvalidArgument, std::string("malformed ") + what + ": " + e.what());
  }
}

json RectJson(const Rect& r) { return json::array({r.top, r.left, r.height, r.width}); }

Rect RectFromJson(const json& doc) {
  Require(doc.is_array() && doc.size() == 4, "rectangles are [top, left, height, width]");
  Rect r{doc[0].get<int>(), doc[1].get<int>(), doc[2].get<int>(), doc[3].get<int>()};
  Require(r.top >= 0 && r.left >= 0 && r.height >= 0 && r.width >= 0,
          "rectangle fields must be non-negative");
  return r;
}

}  // namespace

json ToJson(const ImageGeometry& g) {
  return {{"height", g.height}, {"width", g.width}, {"channels", g.channels}};
}

ImageGeometry GeometryFromJson(const json& doc) {
  return Parse("geometry", [&] {
    ImageGeometry g{doc.at("height").get<int>(), doc.at("width").get<int>(),
                    doc.value("channels", 1)};
    g.Validate();
    return g;
  });
}

json ToJson(const MaskSet& set) {
  json params = json::array();
  for (const GridParams& p : set.grids) {
    params.push_back({{"patch_h", p.patch.height}, {"patch_w", p.patch.width},
                      {"budget_h", p.budget_h},   {"budget_w", p.budget_w},
                      {"mask_h", p.mask_h},       {"mask_w", p.mask_w},
                      {"stride_h", p.stride_h},   {"stride_w", p.stride_w}});
  }
  json masks = json::array();
  for (const MaskSpec& m : set.masks) {
    json rects = json::array();
    for (const Rect& r : m.rects()) rects.push_back(RectJson(r));
    masks.push_back(std::move(rects));
  }
  return {{"format", kMaskSetFormat},
          {"geometry", ToJson(set.geometry)},
          {"kind", ToString(set.kind)},
          {"patches", set.patch_count},
          {"params", std::move(params)},
          {"masks", std::move(masks)}};
}

MaskSet MaskSetFromJson(const json& doc) {
  MaskSet set = Parse("mask set", [&] {
    Require(doc.value("format", std::string(kMaskSetFormat)) == kMaskSetFormat,
            "unsupported mask set format");
    MaskSet s;
    s.geometry = GeometryFromJson(doc.at("geometry"));
    s.kind = MaskSetKindFromString(doc.value("kind", std::string("custom")));
    s.patch_count = doc.value("patches", 1);
    for (const json& p : doc.value("params", json::array())) {
      GridParams g;
      g.patch = {p.at("patch_h").get<int>(), p.at("patch_w").get<int>()};
      g.budget_h = p.at("budget_h").get<int>();
      g.budget_w = p.at("budget_w").get<int>();
      g.mask_h = p.at("mask_h").get<int>();
      g.mask_w = p.at("mask_w").get<int>();
      g.stride_h = p.at("stride_h").get<int>();
      g.stride_w = p.at("stride_w").get<int>();
      s.grids.push_back(g);
    }
    for (const json& m : doc.at("masks")) {
      std::vector<Rect> rects;
      for (const json& r : m) rects.push_back(RectFromJson(r));
      s.masks.emplace_back(std::move(rects));
    }
    return s;
  });
  set.Validate();
  return set;
}

json ReadJsonFile(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) Fail(ErrorKind::kIo, "cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    Fail(ErrorKind::kIo, path.string() + ": " + e.what());
  }
}

void WriteJsonFile(const json& doc, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) Fail(ErrorKind::kIo, "cannot write " + path.string());
  out << doc.dump() << "\n";
  if (!out) Fail(ErrorKind::kIo, "short write to " + path.string());
}

MaskSet LoadMaskSet(const std::filesystem::path& path) {
  return MaskSetFromJson(ReadJsonFile(path));
}

void SaveMaskSet(const MaskSet& masks, const std::filesystem::path& path) {
  WriteJsonFile(ToJson(masks), path);
}

json ToJson(const PatchThreatModel& t) {
  json shapes = json::array();
  for (const PatchShape& s : t.shapes) shapes.push_back({s.height, s.width});
  json doc = {{"shapes", std::move(shapes)}, {"patches", t.patch_count}};
  if (t.area_budget) doc["area_budget"] = *t.area_budget;
  return doc;
}

PatchThreatModel ThreatModelFromJson(const json& doc) {
  return Parse("threat model", [&] {
    PatchThreatModel t;
    for (const json& s : doc.at("shapes")) {
      t.shapes.push_back({s.at(0).get<int>(), s.at(1).get<int>()});
    }
    t.patch_count = doc.value("patches", 1);
    if (doc.contains("area_budget")) t.area_budget = doc["area_budget"].get<long>();
    return t;
  });
}

json ToJson(const DefenseOutcome& o) {
  return {{"label", o.label},
          {"case", ToString(o.exit_case)},
          {"calls", o.classifier_calls},
          {"witness", o.witness}};
}

namespace {

json FailureJson(const FailingCombination& f) {
  return {{"masks", f.masks}, {"predicted", f.predicted}};
}

}  // namespace

json ToJson(const Certificate& c) {
  json doc = {{"certified", c.certified}, {"reason", ToString(c.reason)}, {"calls", c.calls}};
  doc["failing_pair"] = c.failing ? FailureJson(*c.failing) : json(nullptr);
  if (!c.failures.empty()) {
    json all = json::array();
    for (const FailingCombination& f : c.failures) all.push_back(FailureJson(f));
    doc["failures"] = std::move(all);
  }
  if (c.uncovered_patch) doc["uncovered_patch"] = RectJson(*c.uncovered_patch);
  return doc;
}

json ToJson(const ItemRecord& r) {
  json doc = {{"index", r.index},
              {"name", r.name},
              {"label", r.label},
              {"clean_correct", r.clean_correct},
              {"certified", r.certified},
              {"calls", r.calls}};
  doc["prediction"] = r.clean_prediction ? json(*r.clean_prediction) : json(nullptr);
  doc["case"] = r.clean_case ? json(ToString(*r.clean_case)) : json(nullptr);
  doc["reason"] = r.reason ? json(ToString(*r.reason)) : json(nullptr);
  if (r.error) doc["error"] = *r.error;
  return doc;
}

json SummaryJson(const DatasetMetrics& m) {
  return {{"total", m.total},
          {"clean_correct", m.clean_correct},
          {"certified", m.certified},
          {"clean_accuracy", m.clean_accuracy},
          {"certified_accuracy", m.certified_accuracy}};
}

json ToJson(const DatasetMetrics& m) {
  json doc = SummaryJson(m);
  json items = json::array();
  for (const ItemRecord& r : m.items) items.push_back(ToJson(r));
  doc["per_item"] = std::move(items);
  return doc;
}

json ToJson(const GameInstance& g) {
  json base = json::array();
  for (const BaseEntry& e : g.base) base.push_back({{"masks", e.masks}, {"label", e.label}});
  return {{"format", kGameFormat},
          {"mask_set", ToJson(g.masks)},
          {"threat", ToJson(g.threat)},
          {"label_space", g.label_space},
          {"true_label", g.true_label},
          {"default_label", g.default_label},
          {"base", std::move(base)}};
}

GameInstance GameInstanceFromJson(const json& doc) {
  GameInstance g = Parse("game instance", [&] {
    Require(doc.value("format", std::string(kGameFormat)) == kGameFormat,
            "unsupported game instance format");
    GameInstance out;
    out.masks = MaskSetFromJson(doc.at("mask_set"));
    out.threat = ThreatModelFromJson(doc.at("threat"));
    out.label_space = doc.at("label_space").get<int>();
    out.true_label = doc.at("true_label").get<Label>();
    out.default_label = doc.value("default_label", out.true_label);
    for (const json& e : doc.value("base", json::array())) {
      out.base.push_back({e.at("masks").get<std::vector<std::size_t>>(),
                          e.at("label").get<Label>()});
    }
    return out;
  });
  g.Validate();
  return g;
}

GameInstance LoadGameInstance(const std::filesystem::path& path) {
  return GameInstanceFromJson(ReadJsonFile(path));
}

json ToJson(const Strategy& s) {
  json placement = json::array();
  for (const Rect& r : s.placement) placement.push_back(RectJson(r));
  json assignment = json::array();
  for (const SlotAssignment& a : s.assignment) {
    assignment.push_back({{"masks", a.masks}, {"label", a.label}});
  }
  return {{"index", s.index},
          {"placement_index", s.placement_index},
          {"placement", std::move(placement)},
          {"assignment", std::move(assignment)}};
}

json ToJson(const AttackReport& r) {
  json algorithms = json::array();
  for (Algorithm a : r.algorithms) algorithms.push_back(ToString(a));
  json successes = json::array();
  for (const AttackSuccess& s : r.successes) {
    successes.push_back({{"algorithm", ToString(s.algorithm)},
                         {"returned", s.returned},
                         {"case", ToString(s.exit_case)},
                         {"strategy", ToJson(s.strategy)}});
  }
  const InvariantAudit& a = r.audit;
  json cases = json::object();
  for (int algo = 0; algo < 2; ++algo) {
    json per_case = json::object();
    for (int c = 0; c < 3; ++c) {
      per_case[std::string(ToString(static_cast<ExitCase>(c)))] = {
          {"exits", a.exits[algo][c]}, {"wrong", a.case_violations[algo][c]}};
    }
    cases[std::string(ToString(static_cast<Algorithm>(algo)))] = std::move(per_case);
  }
  return {{"algorithms", std::move(algorithms)},
          {"strategies_tried", r.strategies_tried},
          {"successes", r.success_count},
          {"success_details", std::move(successes)},
          {"exhaustive", r.exhaustive},
          {"placements", r.placements},
          {"defense_masks", r.defense_masks},
          {"max_free_slots", r.max_free_slots},
          {"audit",
           {{"claim1_violations", a.claim1_violations},
            {"claim2_violations", a.claim2_violations},
            {"claim3_violations", a.claim3_violations},
            {"challenger_covering_losses", a.challenger_covering_losses},
            {"cases", std::move(cases)}}}};
}

}  // namespace patchshield
