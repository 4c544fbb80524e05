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

#ifndef PATCHSHIELD_SERIALIZATION_HPP_
#define PATCHSHIELD_SERIALIZATION_HPP_

#include <filesystem>

#include "json.hpp"
#include "patchshield/adversary.hpp"
#include "patchshield/certifier.hpp"
#include "patchshield/defense.hpp"
#include "patchshield/geometry.hpp"

// JSON documents exchanged by the CLI and the Python bindings.
//
// Mask set:
//   {"format": "patchshield.maskset/1",
//    "geometry": {"height": H, "width": W, "channels": C},
//    "kind": "grid" | "shape-cover" | "multi-patch" | "custom",
//    "patches": K,
//    "params": [{"patch_h", "patch_w", "budget_h", "budget_w",
//                "mask_h", "mask_w", "stride_h", "stride_w"}, ...],
//    "masks": [[[top, left, height, width], ...], ...]}
namespace patchshield {

inline constexpr const char* kMaskSetFormat = "patchshield.maskset/1";
inline constexpr const char* kGameFormat = "patchshield.game/1";

nlohmann::json ToJson(const ImageGeometry& geometry);
ImageGeometry GeometryFromJson(const nlohmann::json& doc);

nlohmann::json ToJson(const MaskSet& masks);
MaskSet MaskSetFromJson(const nlohmann::json& doc);
MaskSet LoadMaskSet(const std::filesystem::path& path);
void SaveMaskSet(const MaskSet& masks, const std::filesystem::path& path);

nlohmann::json ToJson(const PatchThreatModel& threat);
PatchThreatModel ThreatModelFromJson(const nlohmann::json& doc);

nlohmann::json ToJson(const DefenseOutcome& outcome);
nlohmann::json ToJson(const Certificate& cert);
nlohmann::json ToJson(const ItemRecord& item);
// Summary fields only; per-item records are added by the caller if wanted.
nlohmann::json SummaryJson(const DatasetMetrics& metrics);
nlohmann::json ToJson(const DatasetMetrics& metrics);

nlohmann::json ToJson(const GameInstance& game);
GameInstance GameInstanceFromJson(const nlohmann::json& doc);
GameInstance LoadGameInstance(const std::filesystem::path& path);

nlohmann::json ToJson(const Strategy& strategy);
nlohmann::json ToJson(const AttackReport& report);

nlohmann::json ReadJsonFile(const std::filesystem::path& path);
void WriteJsonFile(const nlohmann::json& doc, const std::filesystem::path& path);

}  // namespace patchshield

#endif  // PATCHSHIELD_SERIALIZATION_HPP_
