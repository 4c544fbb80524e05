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

#include "patchshield/geometry.hpp"

#include <algorithm>
#include <bit>
#include <limits>
#include <set>
#include <string>

#include "patchshield/error.hpp"

namespace patchshield {

void ImageGeometry::Validate() const {
  Require(height >= 1 && width >= 1 && channels >= 1,
          "image geometry must have height, width and channels >= 1, got " +
              std::to_string(height) + "x" + std::to_string(width) + "x" +
              std::to_string(channels));
}

void PatchThreatModel::Validate(const ImageGeometry& geometry) const {
  Require(patch_count >= 1, "patch count must be >= 1");
  Require(!shapes.empty(), "threat model needs at least one patch shape");
  for (const PatchShape& s : shapes) {
    Require(s.height >= 1 && s.width >= 1 && s.height <= geometry.height &&
                s.width <= geometry.width,
            "patch shape " + std::to_string(s.height) + "x" +
                std::to_string(s.width) + " does not fit the image");
  }
}

// ---------------------------------------------------------------------------
// PixelSet

void PixelSet::Fill(const Rect& r) {
  for (int i = std::max(r.top, 0); i < std::min(r.bottom(), height_); ++i) {
    for (int j = std::max(r.left, 0); j < std::min(r.right(), width_); ++j) {
      Set(i, j);
    }
  }
}

void PixelSet::Merge(const PixelSet& other) {
  for (std::size_t w = 0; w < words_.size(); ++w) words_[w] |= other.words_[w];
}

bool PixelSet::ContainsRect(const Rect& r) const {
  for (int i = r.top; i < r.bottom(); ++i) {
    for (int j = r.left; j < r.right(); ++j) {
      if (!Test(i, j)) return false;
    }
  }
  return true;
}

std::size_t PixelSet::count() const {
  std::size_t total = 0;
  for (std::uint64_t w : words_) total += std::popcount(w);
  return total;
}

// ---------------------------------------------------------------------------
// MaskSpec

MaskSpec::MaskSpec(std::vector<Rect> rects) {
  std::erase_if(rects, [](const Rect& r) { return r.empty(); });
  std::sort(rects.begin(), rects.end());
  rects.erase(std::unique(rects.begin(), rects.end()), rects.end());
  for (std::size_t i = 0; i < rects.size(); ++i) {
    bool contained = false;
    for (std::size_t j = 0; j < rects.size() && !contained; ++j) {
      contained = j != i && rects[j].Contains(rects[i]);
    }
    if (!contained) rects_.push_back(rects[i]);
  }
}

MaskSpec MaskSpec::Union(const MaskSpec& other) const {
  std::vector<Rect> all = rects_;
  all.insert(all.end(), other.rects_.begin(), other.rects_.end());
  return MaskSpec(std::move(all));
}

bool MaskSpec::Covers(const Rect& region) const {
  if (region.empty()) return true;
  std::vector<const Rect*> touching;
  for (const Rect& r : rects_) {
    if (r.Contains(region)) return true;
    if (r.Intersects(region)) touching.push_back(&r);
  }
  if (touching.size() < 2) return false;
  // Rasterise the region against the rectangles that reach into it.
  const int h = region.height;
  const int w = region.width;
  std::vector<char> hit(static_cast<std::size_t>(h) * w, 0);
  for (const Rect* r : touching) {
    for (int i = std::max(r->top, region.top); i < std::min(r->bottom(), region.bottom()); ++i) {
      for (int j = std::max(r->left, region.left); j < std::min(r->right(), region.right()); ++j) {
        hit[static_cast<std::size_t>(i - region.top) * w + (j - region.left)] = 1;
      }
    }
  }
  return std::all_of(hit.begin(), hit.end(), [](char c) { return c != 0; });
}

bool MaskSpec::CoversAll(std::span<const Rect> regions) const {
  return std::all_of(regions.begin(), regions.end(),
                     [this](const Rect& r) { return Covers(r); });
}

bool MaskSpec::FitsIn(const ImageGeometry& g) const {
  return std::all_of(rects_.begin(), rects_.end(),
                     [&g](const Rect& r) { return r.FitsIn(g); });
}

PixelSet MaskSpec::Render(const ImageGeometry& g) const {
  PixelSet set(g);
  for (const Rect& r : rects_) set.Fill(r);
  return set;
}

void MaskSet::Validate() const {
  geometry.Validate();
  Require(!masks.empty(), "mask set is empty");
  for (std::size_t i = 0; i < masks.size(); ++i) {
    Require(masks[i].FitsIn(geometry),
            "mask " + std::to_string(i) + " lies outside the image bounds");
  }
  Require(patch_count >= 1, "mask set patch count must be >= 1");
}

// ---------------------------------------------------------------------------
// Sliding-mask grids

AxisParams ComputeMaskParams(int n, int p_est, int k) {
  Require(n >= 1, "image size must be >= 1");
  Require(p_est >= 1 && p_est <= n,
          "estimated patch size " + std::to_string(p_est) +
              " must lie in [1, " + std::to_string(n) + "]");
  Require(k >= 1, "mask budget must be >= 1");
  const int span = n - p_est + 1;
  const int stride = (span + k - 1) / k;
  const int size = p_est + stride - 1;
  if (size > n) return {1, n};
  return {stride, size};
}

std::vector<int> Generate1dIndexSet(int n, int m, int s) {
  Require(m >= 1 && m <= n, "mask size " + std::to_string(m) +
                                " must lie in [1, " + std::to_string(n) + "]");
  Require(s >= 1, "mask stride must be >= 1");
  std::vector<int> offsets;
  for (int i = 0; i <= n - m; i += s) offsets.push_back(i);
  if (offsets.back() != n - m) offsets.push_back(n - m);
  return offsets;
}

int MaskSetSize(int n, int m, int s) {
  Require(m >= 1 && m <= n, "mask size must lie in [1, n]");
  Require(s >= 1, "mask stride must be >= 1");
  return (n - m + s - 1) / s + 1;
}

int MaxCertifiedPatchSize(int m, int s) {
  Require(s >= 1, "mask stride must be >= 1");
  Require(s <= m, "mask stride " + std::to_string(s) +
                      " exceeds mask size " + std::to_string(m) +
                      "; the grid leaves uncovered gaps");
  return m - s + 1;
}

namespace {

GridParams SolveGrid(const ImageGeometry& g, PatchShape p_est, int budget_h,
                     int budget_w) {
  const AxisParams rows = ComputeMaskParams(g.height, p_est.height, budget_h);
  const AxisParams cols = ComputeMaskParams(g.width, p_est.width, budget_w);
  return {p_est, budget_h, budget_w, rows.size, cols.size, rows.stride, cols.stride};
}

void AppendGrid(const ImageGeometry& g, const GridParams& p,
                std::vector<MaskSpec>& out, std::set<MaskSpec>& seen) {
  for (int top : Generate1dIndexSet(g.height, p.mask_h, p.stride_h)) {
    for (int left : Generate1dIndexSet(g.width, p.mask_w, p.stride_w)) {
      MaskSpec mask({Rect{top, left, p.mask_h, p.mask_w}});
      if (seen.insert(mask).second) out.push_back(std::move(mask));
    }
  }
}

}  // namespace

MaskSet GenerateMaskSet2d(const ImageGeometry& geometry, PatchShape p_est,
                          int budget_h, int budget_w) {
  geometry.Validate();
  MaskSet set;
  set.geometry = geometry;
  set.kind = MaskSetKind::kGrid;
  set.grids.push_back(SolveGrid(geometry, p_est, budget_h, budget_w));
  std::set<MaskSpec> seen;
  AppendGrid(geometry, set.grids.front(), set.masks, seen);
  return set;
}

std::optional<Rect> FindUncoveredPatch(const MaskSet& masks,
                                       const PatchThreatModel& threat) {
  const ImageGeometry& g = masks.geometry;
  threat.Validate(g);
  Require(threat.patch_count == 1,
          "single-patch covering check called with patch count " +
              std::to_string(threat.patch_count));
  for (const PatchShape& shape : threat.shapes) {
    // Remember the last hit; neighbouring placements are usually covered by
    // the same mask.
    std::size_t hint = 0;
    for (int top = 0; top + shape.height <= g.height; ++top) {
      for (int left = 0; left + shape.width <= g.width; ++left) {
        const Rect patch{top, left, shape.height, shape.width};
        bool covered = !masks.masks.empty() && masks.masks[hint].Covers(patch);
        for (std::size_t i = 0; i < masks.masks.size() && !covered; ++i) {
          if (masks.masks[i].Covers(patch)) {
            covered = true;
            hint = i;
          }
        }
        if (!covered) return patch;
      }
    }
  }
  return std::nullopt;
}

bool VerifyRCovering(const MaskSet& masks, const PatchThreatModel& threat) {
  return !FindUncoveredPatch(masks, threat).has_value();
}

// ---------------------------------------------------------------------------
// Shape covers

bool ShapesDominate(std::span<const PatchShape> shapes, long area_budget,
                    const ImageGeometry& geometry) {
  for (int a = 1; a <= geometry.height; ++a) {
    for (int b = 1; b <= geometry.width; ++b) {
      if (static_cast<long>(a) * b > area_budget) break;
      const bool dominated = std::any_of(
          shapes.begin(), shapes.end(),
          [a, b](const PatchShape& s) { return a <= s.height && b <= s.width; });
      if (!dominated) return false;
    }
  }
  return true;
}

namespace {

struct ThresholdPlan {
  long max_area = std::numeric_limits<long>::max();
  long total_area = std::numeric_limits<long>::max();
  int shapes = std::numeric_limits<int>::max();
  int previous = -1;

  bool BetterThan(const ThresholdPlan& o) const {
    if (total_area != o.total_area) return total_area < o.total_area;
    return shapes < o.shapes;
  }
};

}  // namespace

std::vector<PatchShape> GenerateShapeCoverSet(long area_budget,
                                              const ImageGeometry& geometry,
                                              int max_shapes) {
  geometry.Validate();
  const long pixels = static_cast<long>(geometry.pixel_count());
  Require(area_budget >= 1 && area_budget <= pixels,
          "area budget must lie in [1, " + std::to_string(pixels) + "]");
  Require(max_shapes >= 1, "shape count must be >= 1");

  std::vector<PatchShape> shapes;
  if (area_budget >= pixels) {
    shapes.push_back({geometry.height, geometry.width});
  } else {
    // Rows taller than the budget cannot hold a rectangle, so the last
    // threshold is min(height, budget).
    const int last = static_cast<int>(std::min<long>(geometry.height, area_budget));
    auto width_after = [&](int prev) {
      return static_cast<int>(std::min<long>(geometry.width, area_budget / (prev + 1)));
    };
    auto area = [&](int prev, int t) { return static_cast<long>(t) * width_after(prev); };

    // plan[l][t]: best split of heights (0, t] into l shapes ending at t.
    // Pass one minimises the largest shape; pass two minimises total area
    // subject to that maximum.
    const int levels = max_shapes;
    auto run = [&](long area_cap, bool minimax) {
      std::vector<std::vector<ThresholdPlan>> plan(
          levels + 1, std::vector<ThresholdPlan>(last + 1));
      for (int t = 1; t <= last; ++t) {
        const long a = area(0, t);
        if (a <= area_cap) plan[1][t] = {a, a, 1, 0};
      }
      for (int l = 2; l <= levels; ++l) {
        for (int t = 2; t <= last; ++t) {
          for (int prev = 1; prev < t; ++prev) {
            const ThresholdPlan& from = plan[l - 1][prev];
            if (from.shapes == std::numeric_limits<int>::max()) continue;
            const long a = area(prev, t);
            if (a > area_cap) continue;
            ThresholdPlan cand{std::max(from.max_area, a), from.total_area + a, l, prev};
            ThresholdPlan& cur = plan[l][t];
            const bool better = minimax
                                    ? (cand.max_area < cur.max_area ||
                                       (cand.max_area == cur.max_area && cand.BetterThan(cur)))
                                    : cand.BetterThan(cur);
            if (better) cur = cand;
          }
        }
      }
      return plan;
    };

    auto best_level = [&](const std::vector<std::vector<ThresholdPlan>>& plan,
                          bool minimax) {
      int best = -1;
      for (int l = 1; l <= levels; ++l) {
        const ThresholdPlan& p = plan[l][last];
        if (p.shapes == std::numeric_limits<int>::max()) continue;
        if (best < 0) { best = l; continue; }
        const ThresholdPlan& b = plan[best][last];
        const bool better = minimax ? (p.max_area < b.max_area ||
                                       (p.max_area == b.max_area && p.BetterThan(b)))
                                    : p.BetterThan(b);
        if (better) best = l;
      }
      return best;
    };

    const auto first = run(std::numeric_limits<long>::max(), true);
    const long cap = first[best_level(first, true)][last].max_area;
    const auto second = run(cap, false);
    int level = best_level(second, false);
    std::vector<int> thresholds;
    for (int t = last; level >= 1; --level) {
      thresholds.push_back(t);
      t = second[level][t].previous;
    }
    std::reverse(thresholds.begin(), thresholds.end());
    int prev = 0;
    for (int t : thresholds) {
      shapes.push_back({t, width_after(prev)});
      prev = t;
    }
  }

  if (!ShapesDominate(shapes, area_budget, geometry)) {
    Fail(ErrorKind::kConstructionFailure,
         "generated shape set does not dominate every rectangle of area <= " +
             std::to_string(area_budget));
  }
  return shapes;
}

MaskSet GenerateShapeCoverMaskSet(const ImageGeometry& geometry,
                                  std::span<const PatchShape> shapes,
                                  int budget_h, int budget_w) {
  geometry.Validate();
  Require(!shapes.empty(), "shape list is empty");
  MaskSet set;
  set.geometry = geometry;
  set.kind = MaskSetKind::kShapeCover;
  std::set<MaskSpec> seen;
  for (const PatchShape& shape : shapes) {
    set.grids.push_back(SolveGrid(geometry, shape, budget_h, budget_w));
    AppendGrid(geometry, set.grids.back(), set.masks, seen);
  }
  return set;
}

// ---------------------------------------------------------------------------
// Multisets

std::size_t MultisetCount(std::size_t n, std::size_t k, std::size_t cap) {
  // C(n + k - 1, k), built incrementally so intermediate values stay exact.
  if (k == 0) return 1;
  if (n == 0) return 0;
  unsigned __int128 value = 1;
  for (std::size_t i = 1; i <= k; ++i) {
    value = value * (n - 1 + i) / i;
    if (value > cap) return cap + 1;
  }
  return static_cast<std::size_t>(value);
}

void ForEachMultiset(std::size_t n, std::size_t k,
                     const std::function<bool(std::span<const std::size_t>)>& visit) {
  if (n == 0 && k > 0) return;
  std::vector<std::size_t> idx(k, 0);
  while (true) {
    if (!visit(idx)) return;
    // Advance the rightmost position that can still grow.
    std::size_t pos = k;
    while (pos > 0 && idx[pos - 1] == n - 1) --pos;
    if (pos == 0) return;
    const std::size_t v = idx[pos - 1] + 1;
    for (std::size_t i = pos - 1; i < k; ++i) idx[i] = v;
  }
}

MaskSet GenerateMultiPatchMaskSet(const MaskSet& base, int patch_count,
                                  std::size_t cap) {
  base.Validate();
  Require(patch_count >= 2, "multi-patch mask sets need a patch count >= 2");
  const std::size_t total = MultisetCount(base.size(), patch_count, cap);
  if (total > cap) {
    Fail(ErrorKind::kResourceLimit,
         "multi-patch mask set would exceed " + std::to_string(cap) +
             " masks (" + std::to_string(base.size()) + " base masks, K=" +
             std::to_string(patch_count) + ")");
  }
  MaskSet set;
  set.geometry = base.geometry;
  set.kind = MaskSetKind::kMultiPatch;
  set.grids = base.grids;
  set.patch_count = patch_count;
  set.masks.reserve(total);
  std::set<MaskSpec> seen;
  ForEachMultiset(base.size(), patch_count, [&](std::span<const std::size_t> idx) {
    MaskSpec u = base.masks[idx[0]];
    for (std::size_t i = 1; i < idx.size(); ++i) u = u.Union(base.masks[idx[i]]);
    if (seen.insert(u).second) set.masks.push_back(std::move(u));
    return true;
  });
  return set;
}

std::string ToString(MaskSetKind kind) {
  switch (kind) {
    case MaskSetKind::kGrid: return "grid";
    case MaskSetKind::kShapeCover: return "shape-cover";
    case MaskSetKind::kMultiPatch: return "multi-patch";
    case MaskSetKind::kCustom: return "custom";
  }
  return "custom";
}

MaskSetKind MaskSetKindFromString(const std::string& name) {
  if (name == "grid") return MaskSetKind::kGrid;
  if (name == "shape-cover") return MaskSetKind::kShapeCover;
  if (name == "multi-patch") return MaskSetKind::kMultiPatch;
  if (name == "custom") return MaskSetKind::kCustom;
  Fail(ErrorKind::kInvalidArgument, "unknown mask set kind '" + name + "'");
}

}  // namespace patchshield
