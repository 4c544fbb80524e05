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

// Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any
// criterion fails or exceeds its time limit.

#include <chrono>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "game_family.hpp"
#include "patchshield/adversary.hpp"
#include "patchshield/certifier.hpp"
#include "patchshield/defense.hpp"
#include "patchshield/geometry.hpp"
#include "test_util.hpp"

namespace patchshield {
namespace {

using testing::BaseStyle;

struct Verdict {
  bool pass = true;
  std::string detail;

  void Check(bool ok, const std::string& what) {
    if (!ok && pass) detail = "first failure: " + what;
    pass = pass && ok;
  }
};

struct Criterion {
  std::string name;
  double limit_seconds;  // 0 = untimed
  std::function<Verdict()> run;
};

const Algorithm kBoth[] = {Algorithm::kDoubleMasking, Algorithm::kChallengerMasking};

MaskSet OneDimensional(int n, int m, int s) {
  MaskSet set;
  set.geometry = {1, n, 1};
  for (int off : Generate1dIndexSet(n, m, s)) set.masks.push_back(MaskSpec({{0, off, 1, m}}));
  return set;
}

// Single-rectangle masks only: containment by coordinate comparison.
bool RectCovering(const MaskSet& set, int ph, int pw) {
  const ImageGeometry& g = set.geometry;
  for (int top = 0; top + ph <= g.height; ++top) {
    for (int left = 0; left + pw <= g.width; ++left) {
      bool covered = false;
      for (const MaskSpec& m : set.masks) {
        const Rect& r = m.rects()[0];
        if (r.top <= top && r.left <= left && top + ph <= r.top + r.height &&
            left + pw <= r.left + r.width) {
          covered = true;
          break;
        }
      }
      if (!covered) return false;
    }
  }
  return true;
}

Verdict SmallIndexSets() {
  Verdict v;
  v.Check(Generate1dIndexSet(6, 2, 1) == std::vector<int>{0, 1, 2, 3, 4}, "(6,2,1) index set");
  v.Check(Generate1dIndexSet(6, 3, 2) == std::vector<int>{0, 2, 3}, "(6,3,2) index set");
  for (auto [m, s] : {std::pair{2, 1}, std::pair{3, 2}}) {
    const MaskSet set = OneDimensional(6, m, s);
    int positions = 0;
    for (int left = 0; left + 2 <= 6; ++left) {
      bool covered = false;
      for (const MaskSpec& mask : set.masks) covered = covered || mask.Covers({0, left, 1, 2});
      v.Check(covered, "2-pixel patch at " + std::to_string(left));
      ++positions;
    }
    v.Check(positions == 5, "five patch positions");
    v.Check(VerifyRCovering(set, PatchThreatModel{{{1, 2}}, 1, std::nullopt}),
            "verify_r_covering m=" + std::to_string(m));
  }
  v.detail = v.pass ? "[0,1,2,3,4] and [0,2,3]; both cover all 5 positions" : v.detail;
  return v;
}

Verdict DefaultConfig() {
  Verdict v;
  const AxisParams a = ComputeMaskParams(224, 32, 6);
  v.Check(a.stride == 33 && a.size == 64, "s=33, m=64");
  v.Check(Generate1dIndexSet(224, 64, 33).size() == 6 && MaskSetSize(224, 64, 33) == 6,
          "|I| = 6");
  const MaskSet set = GenerateMaskSet2d({224, 224, 3}, {32, 32}, 6, 6);
  v.Check(set.size() == 36, "36 masks");
  v.Check(VerifyRCovering(set, PatchThreatModel::Square(32)), "library covering check");
  v.Check(RectCovering(set, 32, 32), "coordinate covering check over 193^2 placements");
  if (v.pass) v.detail = "s=33 m=64 |I|=6, 36 masks, 37249 placements covered";
  return v;
}

Verdict MaxPatchSweep() {
  Verdict v;
  std::size_t checks = 0;
  for (int n = 2; n <= 16; ++n) {
    for (int s = 1; s <= n; ++s) {
      for (int m = s; m <= n; ++m) {
        const MaskSet set = OneDimensional(n, m, s);
        const int p_star = MaxCertifiedPatchSize(m, s);
        v.Check(p_star == m - s + 1, "p* formula");
        for (int p = 1; p <= p_star; ++p) {
          const std::string tag = "n=" + std::to_string(n) + " s=" + std::to_string(s) +
                                  " m=" + std::to_string(m) + " p=" + std::to_string(p);
          v.Check(RectCovering(set, 1, p), tag + " (coordinates)");
          v.Check(VerifyRCovering(set, PatchThreatModel{{{1, p}}, 1, std::nullopt}),
                  tag + " (library)");
          ++checks;
        }
      }
    }
  }
  if (v.pass) v.detail = std::to_string(checks) + " (n, s, m, p) combinations, zero exceptions";
  return v;
}

Verdict ShapeCover() {
  Verdict v;
  const ImageGeometry g{224, 224, 3};
  const std::vector<PatchShape> reference{{5, 224}, {12, 83}, {23, 38},
                                          {39, 20}, {84, 12}, {224, 5}};
  v.Check(ShapesDominate(reference, 501, g), "reference set, library verifier");
  v.Check(testing::BruteDomination(reference, 501, 224, 224), "reference set, brute force");
  const std::vector<PatchShape> own = GenerateShapeCoverSet(501, g);
  v.Check(ShapesDominate(own, 501, g), "generated set, library verifier");
  v.Check(testing::BruteDomination(own, 501, 224, 224), "generated set, brute force");
  std::ostringstream s;
  for (const PatchShape& p : own) s << p.height << "x" << p.width << " ";
  if (v.pass) v.detail = "reference set and generated {" + s.str() + "} dominate area 501";
  return v;
}

Verdict AdaptiveAttackOracle() {
  Verdict v;
  testing::FamilyOptions options;
  const std::vector<GameInstance> family = testing::GenerateGameFamily(options);
  v.Check(family.size() >= 200, "family size");
  std::size_t certified = 0, one_d = 0, two_d = 0, three_labels = 0;
  std::uint64_t strategies = 0, uncertified_successes = 0;
  for (std::size_t i = 0; i < family.size(); ++i) {
    const GameInstance& g = family[i];
    const Certificate cert = CertifyInstance(g);
    const AttackReport r = ExhaustiveAttack(g, kBoth);
    strategies += r.strategies_tried;
    v.Check(r.exhaustive, "instance " + std::to_string(i) + " not exhaustive");
    // Independent raster enumeration must see the same strategies and outcomes.
    const testing::BruteResult brute = testing::BruteForceGame(g);
    v.Check(brute.strategies == r.strategies_tried &&
                brute.wrong_double + brute.wrong_challenger == r.success_count,
            "instance " + std::to_string(i) + " disagrees with brute force");
    if (!cert.certified) {
      uncertified_successes += r.success_count;
      continue;
    }
    ++certified;
    (g.masks.geometry.height == 1 ? one_d : two_d) += 1;
    three_labels += g.label_space == 3;
    const std::string tag = "certified instance " + std::to_string(i);
    v.Check(r.success_count == 0, tag + ": attack succeeded");
    v.Check(r.audit.claim1_violations == 0, tag + ": claim 1");
    v.Check(r.audit.claim2_violations == 0, tag + ": claim 2");
    v.Check(r.audit.claim3_violations == 0, tag + ": claim 3");
    for (int a = 0; a < 2; ++a) {
      for (int c = 0; c < 3; ++c) {
        v.Check(r.audit.case_violations[a][c] == 0, tag + ": wrong exit via case " +
                                                        std::to_string(c));
      }
    }
    v.Check(r.audit.challenger_covering_losses == 0, tag + ": covering mask lost a game");
  }
  v.Check(certified >= 100 && one_d > 0 && two_d > 0 && three_labels > 0,
          "family coverage of certified instances");
  if (v.pass) {
    v.detail = std::to_string(family.size()) + " instances, " + std::to_string(certified) +
               " certified (" + std::to_string(one_d) + " 1-D, " + std::to_string(two_d) +
               " 2-D, " + std::to_string(three_labels) + " with |Y|=3), " +
               std::to_string(strategies) + " strategies x 2 algorithms (brute force agrees), zero violations; " +
               std::to_string(uncertified_successes) + " successes on uncertified instances";
  }
  return v;
}

Verdict NegativeControl() {
  Verdict v;
  std::mt19937_64 rng(4242);
  std::uint64_t successes = 0;
  int instances = 0;
  for (; instances < 30; ++instances) {
    const GameInstance g = testing::MakeNegativeControl(rng, 1 + instances % 3);
    const Certificate cert = CertifyInstance(g);
    const std::string tag = "control " + std::to_string(instances);
    v.Check(cert.reason == CertReason::kTwoMaskFailure, tag + ": reason");
    v.Check(cert.failing.has_value(), tag + ": no failing pair");
    if (!cert.failing) continue;
    // The reported pair really does carry a wrong base label.
    const auto& idx = cert.failing->masks;
    const PixelSet px =
        g.masks.masks[idx[0]].Union(g.masks.masks[idx[1]]).Render(g.masks.geometry);
    Label base = g.default_label;
    for (const BaseEntry& e : g.base) {
      MaskSpec u = g.masks.masks[e.masks[0]];
      for (std::size_t k = 1; k < e.masks.size(); ++k) u = u.Union(g.masks.masks[e.masks[k]]);
      if (u.Render(g.masks.geometry) == px) base = e.label;
    }
    v.Check(base == cert.failing->predicted && base != g.true_label, tag + ": pair label");
    AttackOptions o;
    o.max_strategies_per_placement = std::uint64_t{1} << 16;
    o.max_total_strategies = std::uint64_t{1} << 20;
    try {
      successes += ExhaustiveAttack(g, kBoth, o).success_count;
    } catch (const Error&) {
      successes += RandomizedAttack(g, kBoth, 20'000, 1, o).success_count;
    }
  }
  if (v.pass) {
    v.detail = std::to_string(instances) + " instances -> TWO_MASK_FAILURE with a concrete pair; " +
               std::to_string(successes) + " attack successes (informational)";
  }
  return v;
}

Verdict CallBounds() {
  Verdict v;
  std::mt19937_64 rng(77);
  std::size_t inputs = 0;
  for (int t = 0; t < 300; ++t) {
    const int n = 4 + static_cast<int>(rng() % 5);
    const ImageGeometry g{n, n, 1};
    const MaskSet masks = GenerateMaskSet2d(g, {2, 2}, 1 + rng() % 3, 1 + rng() % 3);
    const std::size_t m = masks.size();
    std::vector<float> values(g.value_count());
    for (float& x : values) x = static_cast<float>(1 + rng() % 255) / 255.0f;
    const Image img(g, values);
    const int labels = 2 + static_cast<int>(rng() % 3);
    const std::uint64_t salt = rng();
    // Deterministic pseudo-random classifier keyed on the visible pixels.
    FunctionClassifier random([labels, salt](const Image& x) {
      std::uint64_t h = salt;
      for (float f : x.values()) h = (h ^ static_cast<std::uint64_t>(f * 255.0f)) * 1099511628211ull;
      return static_cast<Label>(h % labels);
    });
    CallCounter c1(random);
    const DefenseOutcome ch = ChallengerMasking(img, c1, masks);
    v.Check(c1.count() <= 2 * m - 1 && c1.count() == ch.classifier_calls,
            "challenger calls " + std::to_string(c1.count()) + " for |M|=" + std::to_string(m));
    CallCounter c1s(random);
    DefenseOptions shuffled;
    shuffled.shuffle_seed = salt;
    ChallengerMasking(img, c1s, masks, shuffled);
    v.Check(c1s.count() <= 2 * m - 1, "shuffled challenger calls");

    FunctionClassifier constant([labels](const Image&) { return labels - 1; });
    CallCounter c2(constant);
    const DefenseOutcome dm = DoubleMasking(img, c2, masks);
    v.Check(c2.count() == m && dm.exit_case == ExitCase::kAgreed, "unanimous double masking");

    CallCounter c3(random);
    CertifyOptions full;
    full.full_matrix = true;
    Certify(img, 0, c3, masks, PatchThreatModel::Square(2), full);
    v.Check(c3.count() <= m * (m + 1) / 2, "certify pair evaluations");
    CallCounter c4(constant);
    Certify(img, labels - 1, c4, masks, PatchThreatModel::Square(2));
    v.Check(c4.count() == m * (m + 1) / 2, "certify on certified input");
    inputs += 2;
  }
  if (v.pass) v.detail = std::to_string(inputs) + " inputs, every bound held";
  return v;
}

Verdict TwoPatch() {
  Verdict v;
  std::mt19937_64 rng(2);
  int certified = 0;
  std::uint64_t strategies = 0;
  for (int t = 0; t < 6; ++t) {
    const int labels = t < 3 ? 2 : 3;
    const GameInstance g = testing::MakeTwoPatchInstance(
        t % 3 == 2 ? BaseStyle::kFewErrors : BaseStyle::kCertified, labels, rng);
    v.Check(g.masks.size() == 3, "base set size");
    const Certificate cert = CertifyInstance(g);
    const AttackReport r = ExhaustiveAttack(g, kBoth);
    const testing::BruteResult brute = testing::BruteForceGame(g);
    v.Check(r.strategies_tried == brute.strategies, "strategy count matches brute force");
    v.Check(r.success_count == brute.wrong_double + brute.wrong_challenger,
            "success count matches brute force");
    strategies += r.strategies_tried;
    if (!cert.certified) continue;
    ++certified;
    v.Check(cert.calls == 15, "15 four-mask combinations");
    v.Check(r.exhaustive && r.success_count == 0, "certified two-patch instance attacked");
    v.Check(r.audit.total_violations() == 0, "two-patch invariants");
  }
  v.Check(certified >= 4, "certified two-patch instances");
  if (v.pass) {
    v.detail = std::to_string(certified) + " certified K=2 instances, " +
               std::to_string(strategies) + " strategies, zero successes when certified";
  }
  return v;
}

Verdict Metrics() {
  Verdict v;
  std::mt19937_64 rng(100);
  const ImageGeometry g{4, 4, 1};
  const MaskSet masks = GenerateMaskSet2d(g, {2, 2}, 2, 2);
  TableClassifier table(3, 0);
  std::vector<LabeledImage> items;
  for (int i = 0; i < 100; ++i) {
    std::vector<float> values(g.value_count());
    for (float& x : values) x = static_cast<float>(1 + rng() % 254) / 255.0f;
    const Image img(g, values);
    const Label y = static_cast<Label>(rng() % 3);
    const int noise = static_cast<int>(rng() % 4);  // 0: clean table
    for (std::size_t a = 0; a < masks.size(); ++a) {
      for (std::size_t b = a; b < masks.size(); ++b) {
        const bool flip = noise > 0 && rng() % (2 * noise + 1) == 0;
        table.Insert(ApplyMask(img, masks.masks[a].Union(masks.masks[b])),
                     flip ? static_cast<Label>(rng() % 3) : y);
      }
    }
    items.push_back({"item" + std::to_string(i), img, y});
  }
  const DatasetMetrics m = EvaluateDataset(items, table, masks, PatchThreatModel::Square(2));
  v.Check(m.total == 100, "total");
  v.Check(m.certified <= m.clean_correct, "certified <= clean_correct");
  v.Check(m.certified_accuracy <= m.clean_accuracy, "certified_accuracy <= clean_accuracy");
  for (const ItemRecord& r : m.items) v.Check(!r.certified || r.clean_correct, r.name);
  std::ostringstream s;
  s << "clean " << m.clean_accuracy << ", certified " << m.certified_accuracy;
  if (v.pass) v.detail = s.str();
  return v;
}

}  // namespace
}  // namespace patchshield

int main() {
  using namespace patchshield;
  const std::vector<Criterion> criteria = {
      {"small index sets and their covering", 1.0, SmallIndexSets},
      {"224px default grid (s=33, m=64, 36 masks) exhaustive covering", 30.0, DefaultConfig},
      {"max certified patch sweep n in [2,16]", 10.0, MaxPatchSweep},
      {"area-501 shape cover domination", 5.0, ShapeCover},
      {"certified instances survive exhaustive adaptive attack", 300.0, AdaptiveAttackOracle},
      {"two-mask failures are reported with a concrete pair", 0.0, NegativeControl},
      {"classifier call-count bounds", 0.0, CallBounds},
      {"two-patch certificate implies no two-patch attack", 120.0, TwoPatch},
      {"certified accuracy never exceeds clean accuracy", 0.0, Metrics},
  };
  int failures = 0;
  for (const Criterion& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = c.run();
    } catch (const std::exception& e) {
      v.pass = false;
      v.detail = std::string("exception: ") + e.what();
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    bool pass = v.pass;
    std::string detail = v.detail;
    if (c.limit_seconds > 0 && secs > c.limit_seconds) {
      pass = false;
      detail += " (over the " + std::to_string(c.limit_seconds) + " s limit)";
    }
    failures += !pass;
    std::printf("%s  %-66s %8.3fs  %s\n", pass ? "PASS" : "FAIL", c.name.c_str(), secs,
                detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failures,
              criteria.size());
  return failures == 0 ? 0 : 1;
}
