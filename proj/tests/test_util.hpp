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

#ifndef PATCHSHIELD_TESTS_TEST_UTIL_HPP_
#define PATCHSHIELD_TESTS_TEST_UTIL_HPP_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "patchshield/classifier.hpp"
#include "patchshield/geometry.hpp"

// Reference implementations written independently of the library, used as
// oracles. They favour obviousness over speed.
namespace patchshield::testing {

std::filesystem::path MakeTempDir(const std::string& tag);

// Offsets obtained by sliding an m-wide window with stride s from 0 while it
// fits, then adding the flush-right window if it is missing.
std::vector<int> BruteIndexSet(int n, int m, int s);

// Pixel-by-pixel check that every placement of every shape lies entirely
// inside the rectangles of some mask.
bool BruteCovering(const MaskSet& masks, const std::vector<PatchShape>& shapes);

// Every a x b rectangle (clipped to the image) with a * b <= budget fits in
// some shape.
bool BruteDomination(const std::vector<PatchShape>& shapes, long budget, int height,
                     int width);

using PairLabel = std::function<Label(std::size_t, std::size_t)>;

// Straight transcriptions of the two defenses over a symmetric pair-label
// function.
Label ReferenceDoubleMasking(std::size_t n, const PairLabel& label);
Label ReferenceChallengerMasking(std::size_t n, const PairLabel& label);

// Label with the most votes, smallest id on ties.
Label ReferenceMajority(const std::vector<Label>& labels);

std::string ReadFileBytes(const std::filesystem::path& path);

}  // namespace patchshield::testing

#endif  // PATCHSHIELD_TESTS_TEST_UTIL_HPP_
