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

#ifndef PATCHSHIELD_CERTIFIER_HPP_
#define PATCHSHIELD_CERTIFIER_HPP_

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "patchshield/classifier.hpp"
#include "patchshield/defense.hpp"
#include "patchshield/geometry.hpp"

namespace patchshield {

enum class CertReason { kOk, kNotCovering, kTwoMaskFailure };
std::string_view ToString(CertReason reason);

// A mask combination whose prediction differs from the true label. For
// single-patch certificates `masks` is an index pair into the mask set; for
// multi-patch certificates it is the 2K-multiset of base mask indices.
struct FailingCombination {
  std::vector<std::size_t> masks;
  Label predicted = 0;
  friend bool operator==(const FailingCombination&, const FailingCombination&) = default;
};

struct Certificate {
  bool certified = false;
  CertReason reason = CertReason::kNotCovering;
  std::optional<FailingCombination> failing;   // first in lexicographic order
  std::vector<FailingCombination> failures;    // every failure (full-matrix mode)
  std::optional<Rect> uncovered_patch;         // NOT_COVERING evidence
  std::size_t calls = 0;
};

struct CertifyOptions {
  float mask_fill = 0.0f;
  // Evaluate every combination instead of stopping at the first failing batch.
  bool full_matrix = false;
  std::size_t batch_size = 64;
  std::size_t parallelism = 1;
  std::size_t combination_cap = kDefaultCombinationCap;
};

// Checks two-mask correctness over unordered pairs (i <= j), in lexicographic
// order, batching `batch_size` queries per oracle call.
template <PairOracle O>
Certificate CheckTwoMaskCorrectness(std::size_t mask_count, Label true_label, O& oracle,
                                    bool full_matrix = false, std::size_t batch_size = 64) {
  Certificate cert;
  cert.reason = CertReason::kOk;
  std::vector<MaskPair> pending;
  std::vector<Label> labels;
  auto flush = [&]() {
    labels.assign(pending.size(), 0);
    oracle(std::span<const MaskPair>(pending), std::span<Label>(labels));
    cert.calls += pending.size();
    for (std::size_t k = 0; k < pending.size(); ++k) {
      if (labels[k] == true_label) continue;
      FailingCombination f{{pending[k].first, pending[k].second}, labels[k]};
      if (!cert.failing) cert.failing = f;
      if (full_matrix) cert.failures.push_back(std::move(f));
    }
    pending.clear();
    return full_matrix || !cert.failing;
  };
  const std::size_t batch = std::max<std::size_t>(1, batch_size);
  bool keep_going = true;
  for (std::size_t i = 0; i < mask_count && keep_going; ++i) {
    for (std::size_t j = i; j < mask_count && keep_going; ++j) {
      pending.push_back({i, j});
      if (pending.size() == batch) keep_going = flush();
    }
  }
  if (keep_going && !pending.empty()) flush();
  if (cert.failing) cert.reason = CertReason::kTwoMaskFailure;
  cert.certified = !cert.failing.has_value();
  return cert;
}

// Two-mask correctness of `image` without the covering check.
Certificate CertifyTwoMask(const Image& image, Label true_label, const Classifier& classifier,
                           const MaskSet& masks, const CertifyOptions& options = {});

// Full certification for a single patch: covering check, then two-mask
// correctness over every unordered pair including i == j.
Certificate Certify(const Image& image, Label true_label, const Classifier& classifier,
                    const MaskSet& masks, const PatchThreatModel& threat,
                    const CertifyOptions& options = {});

// K-patch certification from a single-patch base set: the base must cover
// each shape, and every 2K-multiset of base masks must predict the true label.
Certificate CertifyMultiPatch(const Image& image, Label true_label,
                              const Classifier& classifier, const MaskSet& base,
                              const PatchThreatModel& threat,
                              const CertifyOptions& options = {});

struct ItemRecord {
  std::size_t index = 0;
  std::string name;
  Label label = 0;
  std::optional<Label> clean_prediction;
  std::optional<ExitCase> clean_case;
  bool clean_correct = false;
  bool certified = false;
  std::optional<CertReason> reason;
  std::size_t calls = 0;
  std::optional<std::string> error;
};

struct DatasetMetrics {
  std::size_t total = 0;
  std::size_t clean_correct = 0;
  std::size_t certified = 0;
  double clean_accuracy = 0.0;
  double certified_accuracy = 0.0;
  std::vector<ItemRecord> items;
};

enum class DefenseAlgorithm { kDoubleMasking, kChallengerMasking };

struct EvaluateOptions {
  CertifyOptions certify;
  DefenseOptions defense;
  DefenseAlgorithm algorithm = DefenseAlgorithm::kDoubleMasking;
};

// Streams labelled images through the defense and the certifier. The
// covering check runs once; per-item failures are recorded, not thrown.
// For threat.patch_count >= 2 the mask set is treated as the single-patch
// base and the defense runs on its K-union set.
class DatasetEvaluator {
 public:
  DatasetEvaluator(const Classifier& classifier, MaskSet masks, PatchThreatModel threat,
                   EvaluateOptions options = {});

  const ItemRecord& Evaluate(std::string name, const Image& image, Label label);
  const ItemRecord& RecordFailure(std::string name, Label label, std::string error);

  DatasetMetrics Finish() const;
  const MaskSet& defense_masks() const { return defense_masks_; }
  bool covering() const { return !uncovered_.has_value(); }

 private:
  const Classifier& classifier_;
  MaskSet base_;
  MaskSet defense_masks_;
  PatchThreatModel threat_;
  EvaluateOptions options_;
  std::optional<Rect> uncovered_;
  std::vector<ItemRecord> items_;
};

struct LabeledImage {
  std::string name;
  Image image;
  Label label = 0;
};

DatasetMetrics EvaluateDataset(std::span<const LabeledImage> items, const Classifier& classifier,
                               const MaskSet& masks, const PatchThreatModel& threat,
                               const EvaluateOptions& options = {});

}  // namespace patchshield

#endif  // PATCHSHIELD_CERTIFIER_HPP_
