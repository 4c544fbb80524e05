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

#ifndef PATCHSHIELD_ADVERSARY_HPP_
#define PATCHSHIELD_ADVERSARY_HPP_

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "patchshield/certifier.hpp"
#include "patchshield/classifier.hpp"
#include "patchshield/defense.hpp"
#include "patchshield/geometry.hpp"
#include "patchshield/image.hpp"

// Exhaustive adaptive-attacker search on toy instances.
//
// The attacker model: once a patch is placed, every masked query whose mask
// union fully hides the patch sees the clean image and returns the clean
// prediction. Every other query (a "free slot") may return any label the
// attacker likes, subject only to determinism: queries whose rendered mask
// unions are pixel-identical see identical images and share one label. Any
// concrete patch content induces one such assignment, so searching all
// assignments dominates every realisable attack.
namespace patchshield {

enum class Algorithm { kDoubleMasking, kChallengerMasking };
std::string_view ToString(Algorithm algorithm);
Algorithm AlgorithmFromString(std::string_view name);

// Clean prediction of one mask combination (indices into GameInstance::masks;
// any multiset size up to 2K).
struct BaseEntry {
  std::vector<std::size_t> masks;
  Label label = 0;
};

struct GameInstance {
  MaskSet masks;             // single-patch mask set
  PatchThreatModel threat;   // K >= 2 plays against the K-union set
  int label_space = 2;
  Label true_label = 0;
  Label default_label = 0;   // clean prediction of combinations not listed
  std::vector<BaseEntry> base;

  void Validate() const;
};

// Defense mask set the game is played against.
MaskSet DefenseMaskSet(const GameInstance& game,
                       std::size_t cap = kDefaultCombinationCap);

// Every admissible placement: one rectangle per patch. For K >= 2 these are
// the size-K multisets of single placements (overlap allowed).
std::vector<std::vector<Rect>> EnumeratePlacements(const ImageGeometry& geometry,
                                                   const PatchThreatModel& threat,
                                                   std::size_t cap = kDefaultCombinationCap);

// Multisets of mask indices of size 1..depth whose rendered union does not
// contain every rectangle of `placement`, in (size, lexicographic) order.
std::vector<std::vector<std::size_t>> EnumerateFreeSlots(const MaskSet& masks,
                                                         std::span<const Rect> placement,
                                                         int depth);

struct SlotAssignment {
  std::vector<std::size_t> masks;  // representative pair of defense masks
  Label label = 0;
};

struct Strategy {
  std::uint64_t index = 0;
  std::size_t placement_index = 0;
  std::vector<Rect> placement;
  std::vector<SlotAssignment> assignment;
};

struct AttackSuccess {
  Strategy strategy;
  Algorithm algorithm = Algorithm::kDoubleMasking;
  Label returned = 0;
  ExitCase exit_case = ExitCase::kAgreed;
};

// Counters for the properties the robustness argument relies on. Under a
// certified instance every *_violations counter must stay zero.
struct InvariantAudit {
  std::uint64_t claim1_violations = 0;  // no covering mask predicts the true label
  std::uint64_t claim2_violations = 0;  // second round without a correct label
  std::uint64_t claim3_violations = 0;  // covering mask with a wrong pair label
  std::uint64_t case_violations[2][3] = {};   // [algorithm][exit case] wrong labels
  std::uint64_t exits[2][3] = {};             // [algorithm][exit case] totals
  std::uint64_t challenger_covering_losses = 0;

  std::uint64_t total_violations() const;
};

struct AttackReport {
  std::vector<Algorithm> algorithms;
  std::uint64_t strategies_tried = 0;
  std::uint64_t success_count = 0;
  std::vector<AttackSuccess> successes;  // first `max_recorded`, strategy order
  bool exhaustive = false;
  std::size_t placements = 0;
  std::size_t defense_masks = 0;
  std::size_t max_free_slots = 0;
  InvariantAudit audit;
};

struct AttackOptions {
  // Exhaustive mode refuses placements with more strategies than this
  // (2^20: 20 free slots at two labels).
  std::uint64_t max_strategies_per_placement = std::uint64_t{1} << 20;
  std::uint64_t max_total_strategies = std::uint64_t{1} << 26;
  std::size_t max_recorded = 32;
  std::size_t combination_cap = 200'000;
};

// Number of strategies exhaustive search would visit (saturating).
std::uint64_t CountStrategies(const GameInstance& game, const AttackOptions& options = {});

AttackReport ExhaustiveAttack(const GameInstance& game, std::span<const Algorithm> algorithms,
                              const AttackOptions& options = {});

AttackReport RandomizedAttack(const GameInstance& game, std::span<const Algorithm> algorithms,
                              std::uint64_t trials, std::uint64_t seed,
                              const AttackOptions& options = {});

// Concrete realisation of an instance: a clean image whose every pixel is
// visible (value 0.5) and a table classifier answering the base predictions
// for every mask union it lists.
struct RealizedGame {
  Image clean;
  TableClassifier classifier;
  MaskSet defense_masks;
};
RealizedGame RealizeClean(const GameInstance& game);

// Certificate of the clean instance, computed through the image-level path.
Certificate CertifyInstance(const GameInstance& game, const CertifyOptions& options = {});

// Adversarial image (patch pixels set to 1.0) and a classifier implementing
// `strategy`: covered queries see the clean prediction, free ones the
// assigned label. Used to cross-check the abstract search.
struct RealizedAttack {
  Image adversarial;
  TableClassifier classifier;
};
RealizedAttack RealizeStrategy(const GameInstance& game, const Strategy& strategy);

}  // namespace patchshield

#endif  // PATCHSHIELD_ADVERSARY_HPP_
