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

#ifndef PATCHSHIELD_GEOMETRY_HPP_
#define PATCHSHIELD_GEOMETRY_HPP_

#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace patchshield {

// Image extent in pixels. Rows are indexed first (height), then columns.
struct ImageGeometry {
  int height = 1;
  int width = 1;
  int channels = 1;

  void Validate() const;
  std::size_t pixel_count() const {
    return static_cast<std::size_t>(height) * static_cast<std::size_t>(width);
  }
  std::size_t value_count() const { return pixel_count() * channels; }

  friend bool operator==(const ImageGeometry&, const ImageGeometry&) = default;
};

struct Rect {
  int top = 0;
  int left = 0;
  int height = 0;
  int width = 0;

  int bottom() const { return top + height; }
  int right() const { return left + width; }
  bool empty() const { return height <= 0 || width <= 0; }
  bool Contains(const Rect& other) const {
    return top <= other.top && left <= other.left &&
           other.bottom() <= bottom() && other.right() <= right();
  }
  bool Intersects(const Rect& other) const {
    return top < other.bottom() && other.top < bottom() &&
           left < other.right() && other.left < right();
  }
  bool FitsIn(const ImageGeometry& g) const {
    return top >= 0 && left >= 0 && height >= 1 && width >= 1 &&
           bottom() <= g.height && right() <= g.width;
  }

  friend auto operator<=>(const Rect&, const Rect&) = default;
};

struct PatchShape {
  int height = 1;
  int width = 1;

  friend auto operator<=>(const PatchShape&, const PatchShape&) = default;
};

// The attacker's admissible region set: any of `shapes` anywhere on the
// image, `patch_count` times.
struct PatchThreatModel {
  std::vector<PatchShape> shapes;
  int patch_count = 1;
  // Inclusive pixel budget the shapes were derived from, if any.
  std::optional<long> area_budget;

  static PatchThreatModel Square(int side, int patches = 1) {
    return {{{side, side}}, patches, std::nullopt};
  }
  void Validate(const ImageGeometry& geometry) const;
};

// Dense per-pixel boolean grid (row-major). Used as the canonical identity
// of a rendered mask or mask union.
class PixelSet {
 public:
  PixelSet() = default;
  explicit PixelSet(const ImageGeometry& g)
      : height_(g.height), width_(g.width),
        words_((g.pixel_count() + 63) / 64, 0) {}

  void Set(int row, int col) {
    std::size_t bit = static_cast<std::size_t>(row) * width_ + col;
    words_[bit / 64] |= std::uint64_t{1} << (bit % 64);
  }
  bool Test(int row, int col) const {
    std::size_t bit = static_cast<std::size_t>(row) * width_ + col;
    return (words_[bit / 64] >> (bit % 64)) & 1;
  }
  void Fill(const Rect& r);
  void Merge(const PixelSet& other);
  bool ContainsRect(const Rect& r) const;
  std::size_t count() const;

  friend auto operator<=>(const PixelSet&, const PixelSet&) = default;

 private:
  int height_ = 0;
  int width_ = 0;
  std::vector<std::uint64_t> words_;
};

// A pixel mask: zeros on the union of `rects`, ones elsewhere. The rectangle
// list is kept sorted with duplicates and contained rectangles dropped, so
// equal lists imply equal masks (not the converse).
class MaskSpec {
 public:
  MaskSpec() = default;
  explicit MaskSpec(std::vector<Rect> rects);

  const std::vector<Rect>& rects() const { return rects_; }
  bool empty() const { return rects_.empty(); }

  // Union of two masks (the zero region of m0 ⊙ m1).
  MaskSpec Union(const MaskSpec& other) const;

  // True iff every pixel of `region` lies inside the zero region.
  bool Covers(const Rect& region) const;
  bool CoversAll(std::span<const Rect> regions) const;

  bool FitsIn(const ImageGeometry& g) const;
  PixelSet Render(const ImageGeometry& g) const;

  friend auto operator<=>(const MaskSpec&, const MaskSpec&) = default;

 private:
  std::vector<Rect> rects_;
};

// Parameters of one rectangular sliding-mask grid.
struct GridParams {
  PatchShape patch;          // estimated patch size the grid was solved for
  int budget_h = 1;          // requested mask count per axis
  int budget_w = 1;
  int mask_h = 1;            // mask size
  int mask_w = 1;
  int stride_h = 1;          // mask stride
  int stride_w = 1;

  friend bool operator==(const GridParams&, const GridParams&) = default;
};

enum class MaskSetKind { kGrid, kShapeCover, kMultiPatch, kCustom };

struct MaskSet {
  ImageGeometry geometry;
  std::vector<MaskSpec> masks;
  MaskSetKind kind = MaskSetKind::kCustom;
  std::vector<GridParams> grids;  // one entry per generated shape
  int patch_count = 1;            // >1 for multi-patch union sets

  std::size_t size() const { return masks.size(); }
  void Validate() const;

  friend bool operator==(const MaskSet&, const MaskSet&) = default;
};

struct AxisParams {
  int stride = 1;
  int size = 1;
  friend bool operator==(const AxisParams&, const AxisParams&) = default;
};

// Solves stride and mask size from the image size `n`, the estimated patch
// size `p_est` and the per-axis mask budget `k`:
//   s = ceil((n - p_est + 1) / k),  m = p_est + s - 1.
// A mask wider than the image degenerates to a single full-span mask
// (reported as m = n, s = 1).
AxisParams ComputeMaskParams(int n, int p_est, int k);

// Mask offsets {0, s, 2s, ..., floor((n-m)/s)*s} ∪ {n-m}, ascending, unique.
std::vector<int> Generate1dIndexSet(int n, int m, int s);

// Number of distinct offsets produced by Generate1dIndexSet.
int MaskSetSize(int n, int m, int s);

// Largest patch every position of which is covered by the (m, s) grid.
int MaxCertifiedPatchSize(int m, int s);

MaskSet GenerateMaskSet2d(const ImageGeometry& geometry, PatchShape p_est,
                          int budget_h, int budget_w);

// Exhaustive placement check for a single patch (threat.patch_count must be
// 1). Returns the first uncovered placement in (shape, top, left) order.
std::optional<Rect> FindUncoveredPatch(const MaskSet& masks,
                                       const PatchThreatModel& threat);
bool VerifyRCovering(const MaskSet& masks, const PatchThreatModel& threat);

// True iff every a x b rectangle with a*b <= area_budget (clipped to the
// image) fits inside at least one of `shapes`.
bool ShapesDominate(std::span<const PatchShape> shapes, long area_budget,
                    const ImageGeometry& geometry);

// Builds a small set of rectangle shapes dominating every rectangle whose
// area is at most `area_budget`. Heights are split at increasing thresholds
// t1 < t2 < ... < tL; the shape for (t_{i-1}, t_i] is t_i x
// floor(budget / (t_{i-1} + 1)). Thresholds minimise the largest shape area.
// Throws kConstructionFailure if the result does not verify.
std::vector<PatchShape> GenerateShapeCoverSet(long area_budget,
                                              const ImageGeometry& geometry,
                                              int max_shapes = 6);

// Concatenates one grid per shape (shape-major, row-major within a grid),
// dropping masks already present.
MaskSet GenerateShapeCoverMaskSet(const ImageGeometry& geometry,
                                  std::span<const PatchShape> shapes,
                                  int budget_h, int budget_w);

inline constexpr std::size_t kDefaultCombinationCap = 5'000'000;

// Number of size-k multisets over n items, saturating at `cap + 1`.
std::size_t MultisetCount(std::size_t n, std::size_t k,
                          std::size_t cap = kDefaultCombinationCap);

// Visits every size-k multiset of {0..n-1} as a non-decreasing index list in
// lexicographic order. Stops early when `visit` returns false.
void ForEachMultiset(std::size_t n, std::size_t k,
                     const std::function<bool(std::span<const std::size_t>)>& visit);

// All size-K multisets of `base` rendered as rectangle unions.
MaskSet GenerateMultiPatchMaskSet(const MaskSet& base, int patch_count,
                                  std::size_t cap = kDefaultCombinationCap);

std::string ToString(MaskSetKind kind);
MaskSetKind MaskSetKindFromString(const std::string& name);

}  // namespace patchshield

#endif  // PATCHSHIELD_GEOMETRY_HPP_
