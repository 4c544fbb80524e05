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

#include "test_util.hpp"

#include <algorithm>
#include <fstream>
#include <iterator>
#include <map>
#include <random>
#include <set>

namespace patchshield::testing {

std::filesystem::path MakeTempDir(const std::string& tag) {
  std::random_device rd;
  const auto dir = std::filesystem::temp_directory_path() /
                   ("patchshield_" + tag + "_" + std::to_string(rd()));
  std::filesystem::create_directories(dir);
  return dir;
}

std::vector<int> BruteIndexSet(int n, int m, int s) {
  std::vector<int> out;
  for (int pos = 0; pos + m <= n; pos += s) out.push_back(pos);
  if (out.empty() || out.back() != n - m) out.push_back(n - m);
  return out;
}

namespace {

bool InRect(const Rect& r, int row, int col) {
  return row >= r.top && row < r.top + r.height && col >= r.left && col < r.left + r.width;
}

bool MaskHidesPatch(const MaskSpec& mask, int top, int left, const PatchShape& s) {
  for (int i = top; i < top + s.height; ++i) {
    for (int j = left; j < left + s.width; ++j) {
      bool hidden = false;
      for (const Rect& r : mask.rects()) hidden = hidden || InRect(r, i, j);
      if (!hidden) return false;
    }
  }
  return true;
}

std::vector<std::size_t> Tally(const std::vector<Label>& labels, Label max_label) {
  std::vector<std::size_t> counts(static_cast<std::size_t>(max_label) + 1, 0);
  for (Label l : labels) ++counts[l];
  return counts;
}

}  // namespace

bool BruteCovering(const MaskSet& masks, const std::vector<PatchShape>& shapes) {
  const ImageGeometry& g = masks.geometry;
  for (const PatchShape& s : shapes) {
    for (int top = 0; top + s.height <= g.height; ++top) {
      for (int left = 0; left + s.width <= g.width; ++left) {
        bool covered = false;
        for (const MaskSpec& m : masks.masks) {
          if (MaskHidesPatch(m, top, left, s)) {
            covered = true;
            break;
          }
        }
        if (!covered) return false;
      }
    }
  }
  return true;
}

bool BruteDomination(const std::vector<PatchShape>& shapes, long budget, int height,
                     int width) {
  for (int a = 1; a <= height; ++a) {
    for (int b = 1; b <= width; ++b) {
      if (static_cast<long>(a) * b > budget) continue;
      bool ok = false;
      for (const PatchShape& s : shapes) ok = ok || (a <= s.height && b <= s.width);
      if (!ok) return false;
    }
  }
  return true;
}

Label ReferenceMajority(const std::vector<Label>& labels) {
  const Label max_label = *std::max_element(labels.begin(), labels.end());
  const std::vector<std::size_t> counts = Tally(labels, max_label);
  Label best = 0;
  for (Label l = 0; l <= max_label; ++l) {
    if (counts[l] > counts[best]) best = l;
  }
  return best;
}

Label ReferenceDoubleMasking(std::size_t n, const PairLabel& label) {
  std::vector<Label> one(n);
  for (std::size_t i = 0; i < n; ++i) one[i] = label(i, i);
  const Label majority = ReferenceMajority(one);
  for (std::size_t d = 0; d < n; ++d) {
    if (one[d] == majority) continue;
    std::set<Label> seen;
    for (std::size_t j = 0; j < n; ++j) seen.insert(label(d, j));
    if (seen.size() == 1) return one[d];
  }
  return majority;
}

Label ReferenceChallengerMasking(std::size_t n, const PairLabel& label) {
  std::vector<Label> one(n);
  for (std::size_t i = 0; i < n; ++i) one[i] = label(i, i);
  std::vector<bool> out(n, false);
  std::size_t candidate = 0;
  while (true) {
    std::size_t challenger = n;
    for (std::size_t i = 0; i < n; ++i) {
      if (!out[i] && one[i] != one[candidate]) {
        challenger = i;
        break;
      }
    }
    if (challenger == n) return one[candidate];
    if (label(challenger, candidate) == one[challenger]) {
      out[candidate] = true;
      candidate = challenger;
    } else {
      out[challenger] = true;
    }
  }
}

std::string ReadFileBytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace patchshield::testing
