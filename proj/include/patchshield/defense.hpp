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

#ifndef PATCHSHIELD_DEFENSE_HPP_
#define PATCHSHIELD_DEFENSE_HPP_

#include <algorithm>
#include <concepts>
#include <cstdint>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <string_view>
#include <vector>

#include "patchshield/classifier.hpp"
#include "patchshield/error.hpp"
#include "patchshield/geometry.hpp"
#include "patchshield/image.hpp"

namespace patchshield {

// Indices into a mask set; first == second is a one-mask query. A query
// stands for x ⊙ m_first ⊙ m_second, which is symmetric in its arguments.
struct MaskPair {
  std::size_t first = 0;
  std::size_t second = 0;
};

// Anything that labels a batch of masked variants of one fixed input.
template <class O>
concept PairOracle = requires(O& oracle, std::span<const MaskPair> queries,
                              std::span<Label> out) { oracle(queries, out); };

enum class ExitCase { kAgreed, kDisagreer, kMajority };
std::string_view ToString(ExitCase exit_case);

struct MaskPrediction {
  std::size_t mask = 0;
  Label label = 0;
  friend bool operator==(const MaskPrediction&, const MaskPrediction&) = default;
};

struct MaskPredResult {
  Label majority = 0;
  std::vector<MaskPrediction> disagreers;  // ascending mask index
  std::vector<MaskPrediction> all;
};

// Majority is the most frequent label, ties going to the smallest label id.
MaskPredResult SummarizeMaskPredictions(std::span<const Label> labels);

struct DefenseOutcome {
  Label label = 0;
  ExitCase exit_case = ExitCase::kAgreed;
  std::size_t classifier_calls = 0;
  // Double masking: the accepted disagreer (Case II) or every rejected
  // disagreer (Case III). Challenger masking: the winning mask.
  std::vector<std::size_t> witness;
};

struct SecondRound {
  std::size_t mask = 0;
  std::vector<Label> labels;
};

struct ChallengerGame {
  std::size_t candidate = 0;
  std::size_t challenger = 0;
  Label two_mask = 0;
  bool challenger_won = false;
};

// Optional record of every prediction an algorithm looked at.
struct DefenseTrace {
  std::vector<Label> first_round;
  std::vector<SecondRound> second_rounds;
  std::vector<ChallengerGame> games;

  void Clear() {
    first_round.clear();
    second_rounds.clear();
    games.clear();
  }
};

namespace internal {

template <PairOracle O>
std::vector<Label> FirstRound(std::size_t mask_count, O& oracle) {
  std::vector<MaskPair> queries(mask_count);
  for (std::size_t i = 0; i < mask_count; ++i) queries[i] = {i, i};
  std::vector<Label> labels(mask_count);
  oracle(std::span<const MaskPair>(queries), std::span<Label>(labels));
  return labels;
}

}  // namespace internal

// Double masking over an abstract oracle. Second-round masks are the same
// set as the first round; disagreers are visited in ascending mask index.
template <PairOracle O>
DefenseOutcome RunDoubleMasking(std::size_t mask_count, O& oracle,
                                DefenseTrace* trace = nullptr) {
  if (mask_count == 0) {
    Fail(ErrorKind::kInvalidArgument, "double masking needs a non-empty mask set");
  }
  std::vector<Label> first = internal::FirstRound(mask_count, oracle);
  DefenseOutcome outcome;
  outcome.classifier_calls = mask_count;
  MaskPredResult round_one = SummarizeMaskPredictions(first);
  if (trace) trace->first_round = std::move(first);

  if (round_one.disagreers.empty()) {
    outcome.label = round_one.majority;
    outcome.exit_case = ExitCase::kAgreed;
    return outcome;
  }

  std::vector<MaskPair> queries(mask_count);
  std::vector<Label> second(mask_count);
  for (const MaskPrediction& dis : round_one.disagreers) {
    for (std::size_t j = 0; j < mask_count; ++j) queries[j] = {dis.mask, j};
    oracle(std::span<const MaskPair>(queries), std::span<Label>(second));
    outcome.classifier_calls += mask_count;
    if (trace) trace->second_rounds.push_back({dis.mask, second});
    const bool unanimous = std::all_of(second.begin(), second.end(),
                                       [&](Label l) { return l == second.front(); });
    if (unanimous) {
      outcome.label = dis.label;
      outcome.exit_case = ExitCase::kDisagreer;
      outcome.witness = {dis.mask};
      return outcome;
    }
    outcome.witness.push_back(dis.mask);
  }
  outcome.label = round_one.majority;
  outcome.exit_case = ExitCase::kMajority;
  return outcome;
}

// Challenger masking. Candidates and challengers are taken in ascending mask
// index, or in a seeded random order when `shuffle_seed` is set. A winner
// whose label differs from the first-round majority is reported as
// kDisagreer, otherwise kMajority.
template <PairOracle O>
DefenseOutcome RunChallengerMasking(std::size_t mask_count, O& oracle,
                                    std::optional<std::uint64_t> shuffle_seed = std::nullopt,
                                    DefenseTrace* trace = nullptr) {
  if (mask_count == 0) {
    Fail(ErrorKind::kInvalidArgument, "challenger masking needs a non-empty mask set");
  }
  const std::vector<Label> first = internal::FirstRound(mask_count, oracle);
  DefenseOutcome outcome;
  outcome.classifier_calls = mask_count;
  if (trace) trace->first_round = first;

  std::vector<std::size_t> order(mask_count);
  std::iota(order.begin(), order.end(), std::size_t{0});
  if (shuffle_seed) {
    std::mt19937_64 rng(*shuffle_seed);
    std::shuffle(order.begin(), order.end(), rng);
  }

  // Alive entries per label; the game ends when one label remains.
  std::vector<std::pair<Label, std::size_t>> alive_per_label;
  for (Label l : first) {
    auto it = std::find_if(alive_per_label.begin(), alive_per_label.end(),
                           [l](const auto& e) { return e.first == l; });
    if (it == alive_per_label.end()) {
      alive_per_label.emplace_back(l, 1);
    } else {
      ++it->second;
    }
  }
  std::size_t distinct = alive_per_label.size();
  auto remove = [&](Label l) {
    for (auto& e : alive_per_label) {
      if (e.first == l && --e.second == 0) --distinct;
    }
  };

  std::vector<char> alive(mask_count, 1);
  std::size_t candidate = order.front();
  const Label majority = SummarizeMaskPredictions(first).majority;
  const bool unanimous = distinct == 1;

  std::vector<Label> two_mask(1);
  while (distinct > 1) {
    std::size_t challenger = mask_count;
    for (std::size_t idx : order) {
      if (alive[idx] && first[idx] != first[candidate]) {
        challenger = idx;
        break;
      }
    }
    const MaskPair query{challenger, candidate};
    oracle(std::span<const MaskPair>(&query, 1), std::span<Label>(two_mask));
    ++outcome.classifier_calls;
    const bool won = two_mask.front() == first[challenger];
    if (trace) trace->games.push_back({candidate, challenger, two_mask.front(), won});
    if (won) {
      alive[candidate] = 0;
      remove(first[candidate]);
      candidate = challenger;
    } else {
      alive[challenger] = 0;
      remove(first[challenger]);
    }
  }

  outcome.label = first[candidate];
  outcome.witness = {candidate};
  if (unanimous) {
    outcome.exit_case = ExitCase::kAgreed;
  } else {
    outcome.exit_case = outcome.label == majority ? ExitCase::kMajority : ExitCase::kDisagreer;
  }
  return outcome;
}

// ---------------------------------------------------------------------------
// Image-level entry points.

struct DefenseOptions {
  float mask_fill = 0.0f;
  // Masked images per classifier call (0 = one call per round).
  std::size_t batch_size = 0;
  // Concurrent classifier batches within a round.
  std::size_t parallelism = 1;
  std::optional<std::uint64_t> shuffle_seed;  // challenger masking only
};

// Renders x ⊙ m_a ⊙ m_b for each query and labels them with `classifier`.
class MaskedImageOracle {
 public:
  MaskedImageOracle(const Image& image, const Classifier& classifier,
                    const MaskSet& masks, const DefenseOptions& options);

  void operator()(std::span<const MaskPair> queries, std::span<Label> out) const;

  // Labels arbitrary mask unions of the same image.
  void Evaluate(std::span<const MaskSpec> unions, std::span<Label> out) const;

 private:
  void Dispatch(std::vector<Image>& images, std::span<Label> out) const;

  const Image& image_;
  const Classifier& classifier_;
  const MaskSet& masks_;
  DefenseOptions options_;
};

MaskPredResult MaskPred(const Image& image, const Classifier& classifier,
                        const MaskSet& masks, const DefenseOptions& options = {});

DefenseOutcome DoubleMasking(const Image& image, const Classifier& classifier,
                             const MaskSet& masks, const DefenseOptions& options = {},
                             DefenseTrace* trace = nullptr);

DefenseOutcome ChallengerMasking(const Image& image, const Classifier& classifier,
                                 const MaskSet& masks, const DefenseOptions& options = {},
                                 DefenseTrace* trace = nullptr);

}  // namespace patchshield

#endif  // PATCHSHIELD_DEFENSE_HPP_
