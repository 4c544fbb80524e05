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

#include "patchshield/defense.hpp"

#include <future>

namespace patchshield {

std::string_view ToString(ExitCase exit_case) {
  switch (exit_case) {
    case ExitCase::kAgreed: return "AGREED";
    case ExitCase::kDisagreer: return "DISAGREER";
    case ExitCase::kMajority: return "MAJORITY";
  }
  return "UNKNOWN";
}

MaskPredResult SummarizeMaskPredictions(std::span<const Label> labels) {
  MaskPredResult result;
  if (labels.empty()) return result;
  std::vector<std::pair<Label, std::size_t>> counts;
  for (Label l : labels) {
    auto it = std::find_if(counts.begin(), counts.end(),
                           [l](const auto& e) { return e.first == l; });
    if (it == counts.end()) {
      counts.emplace_back(l, 1);
    } else {
      ++it->second;
    }
  }
  auto best = counts.begin();
  for (auto it = counts.begin(); it != counts.end(); ++it) {
    if (it->second > best->second || (it->second == best->second && it->first < best->first)) {
      best = it;
    }
  }
  result.majority = best->first;
  result.all.reserve(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    result.all.push_back({i, labels[i]});
    if (labels[i] != result.majority) result.disagreers.push_back({i, labels[i]});
  }
  return result;
}

MaskedImageOracle::MaskedImageOracle(const Image& image, const Classifier& classifier,
                                     const MaskSet& masks, const DefenseOptions& options)
    : image_(image), classifier_(classifier), masks_(masks), options_(options) {
  // Masks are spatial; the channel count of the mask set is not binding.
  if (image.geometry().height != masks.geometry.height ||
      image.geometry().width != masks.geometry.width) {
    Fail(ErrorKind::kGeometryMismatch,
         "image is " + std::to_string(image.geometry().height) + "x" +
             std::to_string(image.geometry().width) + " but the mask set expects " +
             std::to_string(masks.geometry.height) + "x" + std::to_string(masks.geometry.width));
  }
  Require(options.mask_fill >= 0.0f && options.mask_fill <= 1.0f,
          "mask fill must lie in [0, 1]");
}

void MaskedImageOracle::operator()(std::span<const MaskPair> queries,
                                   std::span<Label> out) const {
  std::vector<Image> images;
  images.reserve(queries.size());
  for (const MaskPair& q : queries) {
    Image masked = ApplyMask(image_, masks_.masks.at(q.first), options_.mask_fill);
    if (q.second != q.first) {
      ApplyMaskInPlace(masked, masks_.masks.at(q.second), options_.mask_fill);
    }
    images.push_back(std::move(masked));
  }
  Dispatch(images, out);
}

void MaskedImageOracle::Evaluate(std::span<const MaskSpec> unions,
                                 std::span<Label> out) const {
  std::vector<Image> images;
  images.reserve(unions.size());
  for (const MaskSpec& u : unions) images.push_back(ApplyMask(image_, u, options_.mask_fill));
  Dispatch(images, out);
}

void MaskedImageOracle::Dispatch(std::vector<Image>& images, std::span<Label> out) const {
  const std::size_t n = images.size();
  const std::size_t chunk = options_.batch_size == 0 ? n : options_.batch_size;
  std::vector<std::pair<std::size_t, std::size_t>> chunks;
  for (std::size_t begin = 0; begin < n; begin += chunk) {
    chunks.emplace_back(begin, std::min(chunk, n - begin));
  }
  auto run = [&](std::pair<std::size_t, std::size_t> c) {
    const std::vector<Label> labels =
        classifier_.PredictBatch(std::span<const Image>(images).subspan(c.first, c.second));
    if (labels.size() != c.second) {
      Fail(ErrorKind::kBackendUnavailable, "classifier returned the wrong number of labels");
    }
    std::copy(labels.begin(), labels.end(), out.begin() + c.first);
  };
  const std::size_t workers = std::max<std::size_t>(1, options_.parallelism);
  if (workers == 1 || chunks.size() <= 1) {
    for (const auto& c : chunks) run(c);
    return;
  }
  // Chunks write disjoint output ranges, so completion order is irrelevant.
  for (std::size_t wave = 0; wave < chunks.size(); wave += workers) {
    std::vector<std::future<void>> pending;
    for (std::size_t i = wave; i < std::min(chunks.size(), wave + workers); ++i) {
      pending.push_back(std::async(std::launch::async, run, chunks[i]));
    }
    for (auto& f : pending) f.get();
  }
}

MaskPredResult MaskPred(const Image& image, const Classifier& classifier,
                        const MaskSet& masks, const DefenseOptions& options) {
  Require(!masks.masks.empty(), "mask set is empty");
  const MaskedImageOracle oracle(image, classifier, masks, options);
  return SummarizeMaskPredictions(internal::FirstRound(masks.size(), oracle));
}

DefenseOutcome DoubleMasking(const Image& image, const Classifier& classifier,
                             const MaskSet& masks, const DefenseOptions& options,
                             DefenseTrace* trace) {
  const MaskedImageOracle oracle(image, classifier, masks, options);
  return RunDoubleMasking(masks.size(), oracle, trace);
}

DefenseOutcome ChallengerMasking(const Image& image, const Classifier& classifier,
                                 const MaskSet& masks, const DefenseOptions& options,
                                 DefenseTrace* trace) {
  const MaskedImageOracle oracle(image, classifier, masks, options);
  return RunChallengerMasking(masks.size(), oracle, options.shuffle_seed, trace);
}

}  // namespace patchshield
