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

#include "patchshield/adversary.hpp"

#include <algorithm>
#include <limits>
#include <map>
#include <random>

#include "patchshield/error.hpp"

namespace patchshield {

std::string_view ToString(Algorithm algorithm) {
  return algorithm == Algorithm::kDoubleMasking ? "double" : "challenger";
}

Algorithm AlgorithmFromString(std::string_view name) {
  if (name == "double") return Algorithm::kDoubleMasking;
  if (name == "challenger") return Algorithm::kChallengerMasking;
  Fail(ErrorKind::kInvalidArgument, "unknown algorithm '" + std::string(name) + "'");
}

std::uint64_t InvariantAudit::total_violations() const {
  std::uint64_t total = claim1_violations + claim2_violations + claim3_violations +
                        challenger_covering_losses;
  for (const auto& row : case_violations) {
    for (std::uint64_t v : row) total += v;
  }
  return total;
}

void GameInstance::Validate() const {
  masks.Validate();
  threat.Validate(masks.geometry);
  Require(masks.patch_count == 1, "game mask sets must be single-patch sets");
  Require(label_space >= 1, "label space must hold at least one label");
  auto check_label = [&](Label l, const char* what) {
    Require(l >= 0 && l < label_space,
            std::string(what) + " " + std::to_string(l) + " outside the label space");
  };
  check_label(true_label, "true label");
  check_label(default_label, "default label");
  const std::size_t max_size = 2 * static_cast<std::size_t>(threat.patch_count);
  for (const BaseEntry& e : base) {
    Require(!e.masks.empty() && e.masks.size() <= max_size,
            "base entries must name between 1 and 2K masks");
    for (std::size_t m : e.masks) {
      Require(m < masks.size(), "base entry mask index " + std::to_string(m) + " out of range");
    }
    check_label(e.label, "base label");
  }
}

MaskSet DefenseMaskSet(const GameInstance& game, std::size_t cap) {
  if (game.threat.patch_count <= 1) return game.masks;
  return GenerateMultiPatchMaskSet(game.masks, game.threat.patch_count, cap);
}

std::vector<std::vector<Rect>> EnumeratePlacements(const ImageGeometry& geometry,
                                                   const PatchThreatModel& threat,
                                                   std::size_t cap) {
  threat.Validate(geometry);
  std::vector<Rect> singles;
  for (const PatchShape& s : threat.shapes) {
    for (int top = 0; top + s.height <= geometry.height; ++top) {
      for (int left = 0; left + s.width <= geometry.width; ++left) {
        const Rect r{top, left, s.height, s.width};
        if (std::find(singles.begin(), singles.end(), r) == singles.end()) singles.push_back(r);
      }
    }
  }
  const std::size_t k = static_cast<std::size_t>(threat.patch_count);
  if (MultisetCount(singles.size(), k, cap) > cap) {
    Fail(ErrorKind::kResourceLimit, "too many patch placements to enumerate");
  }
  std::vector<std::vector<Rect>> placements;
  ForEachMultiset(singles.size(), k, [&](std::span<const std::size_t> idx) {
    std::vector<Rect> p;
    for (std::size_t i : idx) p.push_back(singles[i]);
    placements.push_back(std::move(p));
    return true;
  });
  return placements;
}

namespace {

bool UnionCovers(const PixelSet& pixels, std::span<const Rect> placement) {
  return std::all_of(placement.begin(), placement.end(),
                     [&](const Rect& r) { return pixels.ContainsRect(r); });
}

MaskSpec UnionOf(const MaskSet& set, std::span<const std::size_t> idx) {
  MaskSpec u = set.masks.at(idx[0]);
  for (std::size_t i = 1; i < idx.size(); ++i) u = u.Union(set.masks.at(idx[i]));
  return u;
}

std::uint64_t SaturatingPow(std::uint64_t base, std::size_t exp, std::uint64_t limit) {
  std::uint64_t v = 1;
  for (std::size_t i = 0; i < exp; ++i) {
    if (base != 0 && v > limit / base) return limit + 1;
    v *= base;
  }
  return v;
}

// Precomputed game structure shared by exhaustive and randomized search.
struct GameModel {
  const GameInstance& game;
  MaskSet defense;
  std::size_t nd = 0;
  std::vector<std::size_t> pair_class;               // nd * nd
  std::vector<PixelSet> class_pixels;
  std::vector<std::pair<std::size_t, std::size_t>> class_rep;
  std::vector<Label> class_base;
  std::vector<std::vector<Rect>> placements;

  GameModel(const GameInstance& g, const AttackOptions& options)
      : game(g), defense(DefenseMaskSet(g, options.combination_cap)), nd(defense.size()) {
    g.Validate();
    const ImageGeometry& geom = g.masks.geometry;

    std::map<PixelSet, Label> base_by_union;
    for (const BaseEntry& e : g.base) {
      PixelSet px = UnionOf(g.masks, e.masks).Render(geom);
      auto [it, inserted] = base_by_union.emplace(std::move(px), e.label);
      if (!inserted && it->second != e.label) {
        Fail(ErrorKind::kInvalidArgument,
             "base entries with identical mask unions disagree on the label");
      }
    }

    std::vector<PixelSet> rendered;
    rendered.reserve(nd);
    for (const MaskSpec& m : defense.masks) rendered.push_back(m.Render(geom));

    std::map<PixelSet, std::size_t> class_of;
    pair_class.assign(nd * nd, 0);
    for (std::size_t a = 0; a < nd; ++a) {
      for (std::size_t b = a; b < nd; ++b) {
        PixelSet px = rendered[a];
        px.Merge(rendered[b]);
        auto [it, inserted] = class_of.emplace(px, class_pixels.size());
        if (inserted) {
          auto base_it = base_by_union.find(px);
          class_base.push_back(base_it == base_by_union.end() ? g.default_label
                                                              : base_it->second);
          class_pixels.push_back(std::move(px));
          class_rep.emplace_back(a, b);
        }
        pair_class[a * nd + b] = pair_class[b * nd + a] = it->second;
      }
    }
    placements = EnumeratePlacements(geom, g.threat, options.combination_cap);
  }

  std::vector<std::size_t> FreeClasses(std::span<const Rect> placement) const {
    std::vector<std::size_t> free;
    for (std::size_t c = 0; c < class_pixels.size(); ++c) {
      if (!UnionCovers(class_pixels[c], placement)) free.push_back(c);
    }
    return free;
  }

  std::vector<char> CoveringMasks(std::span<const Rect> placement) const {
    std::vector<char> cover(nd);
    for (std::size_t a = 0; a < nd; ++a) cover[a] = defense.masks[a].CoversAll(placement);
    return cover;
  }
};

// Plays one fully specified strategy against each algorithm.
class StrategyRunner {
 public:
  StrategyRunner(const GameModel& model, std::span<const Algorithm> algorithms,
                 AttackReport& report, std::size_t max_recorded)
      : model_(model), algorithms_(algorithms), report_(report),
        max_recorded_(max_recorded), labels_(model.class_base) {}

  std::vector<Label>& labels() { return labels_; }

  void Run(std::uint64_t index, std::size_t placement_index,
           std::span<const std::size_t> free, const std::vector<char>& cover) {
    const Label y = model_.game.true_label;
    const std::size_t nd = model_.nd;
    auto label_of = [&](std::size_t a, std::size_t b) {
      return labels_[model_.pair_class[a * nd + b]];
    };
    auto oracle = [&](std::span<const MaskPair> queries, std::span<Label> out) {
      for (std::size_t k = 0; k < queries.size(); ++k) {
        out[k] = label_of(queries[k].first, queries[k].second);
      }
    };

    InvariantAudit& audit = report_.audit;
    bool covering_correct = false;
    for (std::size_t a = 0; a < nd && !covering_correct; ++a) {
      covering_correct = cover[a] && label_of(a, a) == y;
    }
    if (!covering_correct) ++audit.claim1_violations;
    for (std::size_t a = 0; a < nd; ++a) {
      if (!cover[a]) continue;
      for (std::size_t b = 0; b < nd; ++b) {
        if (label_of(a, b) != y) {
          ++audit.claim3_violations;
          break;
        }
      }
    }

    ++report_.strategies_tried;
    for (Algorithm algo : algorithms_) {
      trace_.Clear();
      const DefenseOutcome outcome =
          algo == Algorithm::kDoubleMasking
              ? RunDoubleMasking(nd, oracle, &trace_)
              : RunChallengerMasking(nd, oracle, std::nullopt, &trace_);
      const int a = static_cast<int>(algo);
      const int c = static_cast<int>(outcome.exit_case);
      ++audit.exits[a][c];
      if (algo == Algorithm::kDoubleMasking) {
        for (const SecondRound& round : trace_.second_rounds) {
          if (std::find(round.labels.begin(), round.labels.end(), y) == round.labels.end()) {
            ++audit.claim2_violations;
          }
        }
      } else {
        for (const ChallengerGame& game : trace_.games) {
          if (cover[game.candidate] && game.challenger_won) ++audit.challenger_covering_losses;
        }
      }
      if (outcome.label == y) continue;
      ++audit.case_violations[a][c];
      ++report_.success_count;
      if (report_.successes.size() < max_recorded_) {
        report_.successes.push_back(
            {Describe(index, placement_index, free), algo, outcome.label, outcome.exit_case});
      }
    }
  }

 private:
  Strategy Describe(std::uint64_t index, std::size_t placement_index,
                    std::span<const std::size_t> free) const {
    Strategy s;
    s.index = index;
    s.placement_index = placement_index;
    s.placement = model_.placements[placement_index];
    for (std::size_t c : free) {
      const auto [a, b] = model_.class_rep[c];
      s.assignment.push_back({{a, b}, labels_[c]});
    }
    return s;
  }

  const GameModel& model_;
  std::span<const Algorithm> algorithms_;
  AttackReport& report_;
  std::size_t max_recorded_;
  std::vector<Label> labels_;
  DefenseTrace trace_;
};

AttackReport EmptyReport(const GameModel& model, std::span<const Algorithm> algorithms) {
  Require(!algorithms.empty(), "no algorithm selected");
  AttackReport report;
  report.algorithms.assign(algorithms.begin(), algorithms.end());
  report.placements = model.placements.size();
  report.defense_masks = model.nd;
  return report;
}

}  // namespace

std::vector<std::vector<std::size_t>> EnumerateFreeSlots(const MaskSet& masks,
                                                         std::span<const Rect> placement,
                                                         int depth) {
  Require(depth >= 1, "slot depth must be >= 1");
  std::vector<std::vector<std::size_t>> slots;
  for (int size = 1; size <= depth; ++size) {
    ForEachMultiset(masks.size(), static_cast<std::size_t>(size),
                    [&](std::span<const std::size_t> idx) {
                      if (!UnionCovers(UnionOf(masks, idx).Render(masks.geometry), placement)) {
                        slots.emplace_back(idx.begin(), idx.end());
                      }
                      return true;
                    });
  }
  return slots;
}

std::uint64_t CountStrategies(const GameInstance& game, const AttackOptions& options) {
  const GameModel model(game, options);
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() / 2;
  std::uint64_t total = 0;
  for (const auto& p : model.placements) {
    total += SaturatingPow(game.label_space, model.FreeClasses(p).size(), limit);
    if (total > limit) return limit;
  }
  return total;
}

AttackReport ExhaustiveAttack(const GameInstance& game, std::span<const Algorithm> algorithms,
                              const AttackOptions& options) {
  const GameModel model(game, options);
  AttackReport report = EmptyReport(model, algorithms);
  const std::uint64_t radix = static_cast<std::uint64_t>(game.label_space);

  std::vector<std::vector<std::size_t>> free_per_placement;
  std::uint64_t total = 0;
  for (const auto& p : model.placements) {
    free_per_placement.push_back(model.FreeClasses(p));
    const std::size_t f = free_per_placement.back().size();
    report.max_free_slots = std::max(report.max_free_slots, f);
    const std::uint64_t n = SaturatingPow(radix, f, options.max_strategies_per_placement);
    if (n > options.max_strategies_per_placement) {
      Fail(ErrorKind::kResourceLimit,
           "placement with " + std::to_string(f) + " free slots exceeds the exhaustive cap; "
           "use randomized search");
    }
    total += n;
    if (total > options.max_total_strategies) {
      Fail(ErrorKind::kResourceLimit,
           "exhaustive search exceeds " + std::to_string(options.max_total_strategies) +
               " strategies; use randomized search");
    }
  }

  StrategyRunner runner(model, algorithms, report, options.max_recorded);
  std::uint64_t index = 0;
  for (std::size_t p = 0; p < model.placements.size(); ++p) {
    const std::vector<std::size_t>& free = free_per_placement[p];
    const std::vector<char> cover = model.CoveringMasks(model.placements[p]);
    std::vector<Label>& labels = runner.labels();
    labels = model.class_base;
    for (std::size_t c : free) labels[c] = 0;
    // Odometer over label assignments of the free classes.
    while (true) {
      runner.Run(index++, p, free, cover);
      std::size_t digit = 0;
      while (digit < free.size() && ++labels[free[digit]] == game.label_space) {
        labels[free[digit]] = 0;
        ++digit;
      }
      if (digit == free.size()) break;
    }
  }
  report.exhaustive = true;
  return report;
}

AttackReport RandomizedAttack(const GameInstance& game, std::span<const Algorithm> algorithms,
                              std::uint64_t trials, std::uint64_t seed,
                              const AttackOptions& options) {
  Require(trials >= 1, "randomized attack needs at least one trial");
  const GameModel model(game, options);
  AttackReport report = EmptyReport(model, algorithms);
  std::vector<std::vector<std::size_t>> free_per_placement;
  std::vector<std::vector<char>> cover_per_placement;
  for (const auto& p : model.placements) {
    free_per_placement.push_back(model.FreeClasses(p));
    cover_per_placement.push_back(model.CoveringMasks(p));
    report.max_free_slots = std::max(report.max_free_slots, free_per_placement.back().size());
  }

  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick_placement(0, model.placements.size() - 1);
  std::uniform_int_distribution<Label> pick_label(0, game.label_space - 1);
  StrategyRunner runner(model, algorithms, report, options.max_recorded);
  for (std::uint64_t t = 0; t < trials; ++t) {
    const std::size_t p = pick_placement(rng);
    std::vector<Label>& labels = runner.labels();
    labels = model.class_base;
    for (std::size_t c : free_per_placement[p]) labels[c] = pick_label(rng);
    runner.Run(t, p, free_per_placement[p], cover_per_placement[p]);
  }
  report.exhaustive = false;
  return report;
}

// ---------------------------------------------------------------------------
// Concrete realisation

namespace {

constexpr float kCleanValue = 0.5f;
constexpr float kPatchValue = 1.0f;

std::map<PixelSet, Label> BaseByUnion(const GameInstance& game) {
  std::map<PixelSet, Label> out;
  for (const BaseEntry& e : game.base) {
    out.emplace(UnionOf(game.masks, e.masks).Render(game.masks.geometry), e.label);
  }
  return out;
}

}  // namespace

RealizedGame RealizeClean(const GameInstance& game) {
  game.Validate();
  RealizedGame r{Image::Filled(game.masks.geometry, kCleanValue),
                 TableClassifier(game.label_space, game.default_label, 0.0f),
                 DefenseMaskSet(game)};
  for (const BaseEntry& e : game.base) {
    r.classifier.Insert(ApplyMask(r.clean, UnionOf(game.masks, e.masks)), e.label);
  }
  return r;
}

Certificate CertifyInstance(const GameInstance& game, const CertifyOptions& options) {
  const RealizedGame r = RealizeClean(game);
  if (game.threat.patch_count >= 2) {
    return CertifyMultiPatch(r.clean, game.true_label, r.classifier, game.masks, game.threat,
                             options);
  }
  return Certify(r.clean, game.true_label, r.classifier, game.masks, game.threat, options);
}

RealizedAttack RealizeStrategy(const GameInstance& game, const Strategy& strategy) {
  game.Validate();
  const ImageGeometry& geom = game.masks.geometry;
  const MaskSet defense = DefenseMaskSet(game);
  Image adversarial = Image::Filled(geom, kCleanValue);
  for (const Rect& r : strategy.placement) {
    Require(r.FitsIn(geom), "strategy places a patch outside the image");
    for (int i = r.top; i < r.bottom(); ++i) {
      for (int j = r.left; j < r.right(); ++j) {
        for (int c = 0; c < geom.channels; ++c) adversarial.set(i, j, c, kPatchValue);
      }
    }
  }

  const std::map<PixelSet, Label> base = BaseByUnion(game);
  std::map<PixelSet, Label> assigned;
  for (const SlotAssignment& s : strategy.assignment) {
    assigned[UnionOf(defense, s.masks).Render(geom)] = s.label;
  }

  TableClassifier table(game.label_space, game.default_label, 0.0f);
  for (std::size_t a = 0; a < defense.size(); ++a) {
    for (std::size_t b = a; b < defense.size(); ++b) {
      const MaskSpec u = defense.masks[a].Union(defense.masks[b]);
      const PixelSet px = u.Render(geom);
      Label label = game.default_label;
      if (UnionCovers(px, strategy.placement)) {
        if (auto it = base.find(px); it != base.end()) label = it->second;
      } else {
        auto it = assigned.find(px);
        Require(it != assigned.end(), "strategy leaves a free slot unassigned");
        label = it->second;
      }
      table.Insert(ApplyMask(adversarial, u), label);
    }
  }
  return {std::move(adversarial), std::move(table)};
}

}  // namespace patchshield
