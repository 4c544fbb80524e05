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

#include "patchshield/certifier.hpp"

namespace patchshield {

std::string_view ToString(CertReason reason) {
  switch (reason) {
    case CertReason::kOk: return "OK";
    case CertReason::kNotCovering: return "NOT_COVERING";
    case CertReason::kTwoMaskFailure: return "TWO_MASK_FAILURE";
  }
  return "UNKNOWN";
}

namespace {

DefenseOptions OracleOptions(const CertifyOptions& options) {
  DefenseOptions d;
  d.mask_fill = options.mask_fill;
  d.batch_size = options.batch_size;
  d.parallelism = options.parallelism;
  return d;
}

Certificate NotCovering(const Rect& patch) {
  Certificate cert;
  cert.reason = CertReason::kNotCovering;
  cert.uncovered_patch = patch;
  return cert;
}

PatchThreatModel SinglePatch(PatchThreatModel threat) {
  threat.patch_count = 1;
  return threat;
}

}  // namespace

Certificate CertifyTwoMask(const Image& image, Label true_label, const Classifier& classifier,
                           const MaskSet& masks, const CertifyOptions& options) {
  Require(!masks.masks.empty(), "mask set is empty");
  const DefenseOptions oracle_options = OracleOptions(options);
  const MaskedImageOracle oracle(image, classifier, masks, oracle_options);
  // Batches are issued in lexicographic order, so the earliest failure is
  // also the first failing pair.
  std::size_t batch = options.batch_size;
  if (options.parallelism > 1) batch *= options.parallelism;
  return CheckTwoMaskCorrectness(masks.size(), true_label, oracle, options.full_matrix, batch);
}

Certificate Certify(const Image& image, Label true_label, const Classifier& classifier,
                    const MaskSet& masks, const PatchThreatModel& threat,
                    const CertifyOptions& options) {
  masks.Validate();
  Require(threat.patch_count == 1,
          "Certify handles one patch; use CertifyMultiPatch for K >= 2");
  if (auto gap = FindUncoveredPatch(masks, threat)) return NotCovering(*gap);
  return CertifyTwoMask(image, true_label, classifier, masks, options);
}

Certificate CertifyMultiPatch(const Image& image, Label true_label,
                              const Classifier& classifier, const MaskSet& base,
                              const PatchThreatModel& threat,
                              const CertifyOptions& options) {
  base.Validate();
  Require(threat.patch_count >= 2, "multi-patch certification needs K >= 2");
  if (auto gap = FindUncoveredPatch(base, SinglePatch(threat))) return NotCovering(*gap);

  const std::size_t depth = 2 * static_cast<std::size_t>(threat.patch_count);
  const std::size_t total = MultisetCount(base.size(), depth, options.combination_cap);
  if (total > options.combination_cap) {
    Fail(ErrorKind::kResourceLimit,
         "multi-patch certification needs more than " +
             std::to_string(options.combination_cap) + " mask combinations");
  }

  const DefenseOptions oracle_options = OracleOptions(options);
  const MaskedImageOracle oracle(image, classifier, base, oracle_options);
  Certificate cert;
  cert.reason = CertReason::kOk;
  const std::size_t batch = std::max<std::size_t>(1, options.batch_size) *
                            std::max<std::size_t>(1, options.parallelism);
  std::vector<std::vector<std::size_t>> pending_idx;
  std::vector<MaskSpec> pending;
  std::vector<Label> labels;
  auto flush = [&]() {
    labels.assign(pending.size(), 0);
    oracle.Evaluate(pending, labels);
    cert.calls += pending.size();
    for (std::size_t k = 0; k < pending.size(); ++k) {
      if (labels[k] == true_label) continue;
      FailingCombination f{pending_idx[k], labels[k]};
      if (!cert.failing) cert.failing = f;
      if (options.full_matrix) cert.failures.push_back(std::move(f));
    }
    pending.clear();
    pending_idx.clear();
    return options.full_matrix || !cert.failing;
  };
  bool keep_going = true;
  ForEachMultiset(base.size(), depth, [&](std::span<const std::size_t> idx) {
    MaskSpec u = base.masks[idx[0]];
    for (std::size_t i = 1; i < idx.size(); ++i) u = u.Union(base.masks[idx[i]]);
    pending.push_back(std::move(u));
    pending_idx.emplace_back(idx.begin(), idx.end());
    if (pending.size() == batch) keep_going = flush();
    return keep_going;
  });
  if (keep_going && !pending.empty()) flush();
  if (cert.failing) cert.reason = CertReason::kTwoMaskFailure;
  cert.certified = !cert.failing.has_value();
  return cert;
}

// ---------------------------------------------------------------------------
// Dataset evaluation

DatasetEvaluator::DatasetEvaluator(const Classifier& classifier, MaskSet masks,
                                   PatchThreatModel threat, EvaluateOptions options)
    : classifier_(classifier),
      base_(std::move(masks)),
      threat_(std::move(threat)),
      options_(options) {
  base_.Validate();
  threat_.Validate(base_.geometry);
  uncovered_ = FindUncoveredPatch(base_, SinglePatch(threat_));
  defense_masks_ = threat_.patch_count >= 2
                       ? GenerateMultiPatchMaskSet(base_, threat_.patch_count,
                                                   options_.certify.combination_cap)
                       : base_;
}

const ItemRecord& DatasetEvaluator::Evaluate(std::string name, const Image& image,
                                             Label label) {
  ItemRecord rec;
  rec.index = items_.size();
  rec.name = std::move(name);
  rec.label = label;
  try {
    const CallCounter counter(classifier_);
    const DefenseOutcome outcome =
        options_.algorithm == DefenseAlgorithm::kDoubleMasking
            ? DoubleMasking(image, counter, defense_masks_, options_.defense)
            : ChallengerMasking(image, counter, defense_masks_, options_.defense);
    rec.clean_prediction = outcome.label;
    rec.clean_case = outcome.exit_case;
    rec.clean_correct = outcome.label == label;
    Certificate cert;
    if (uncovered_) {
      cert = NotCovering(*uncovered_);
    } else if (threat_.patch_count >= 2) {
      cert = CertifyMultiPatch(image, label, counter, base_, threat_, options_.certify);
    } else {
      cert = CertifyTwoMask(image, label, counter, base_, options_.certify);
    }
    rec.certified = cert.certified;
    rec.reason = cert.reason;
    rec.calls = counter.count();
  } catch (const Error& e) {
    rec.error = e.what();
  }
  items_.push_back(std::move(rec));
  return items_.back();
}

const ItemRecord& DatasetEvaluator::RecordFailure(std::string name, Label label,
                                                  std::string error) {
  ItemRecord rec;
  rec.index = items_.size();
  rec.name = std::move(name);
  rec.label = label;
  rec.error = std::move(error);
  items_.push_back(std::move(rec));
  return items_.back();
}

DatasetMetrics DatasetEvaluator::Finish() const {
  Require(!items_.empty(), "dataset is empty");
  DatasetMetrics m;
  m.items = items_;
  m.total = items_.size();
  for (const ItemRecord& r : items_) {
    m.clean_correct += r.clean_correct ? 1 : 0;
    m.certified += r.certified ? 1 : 0;
  }
  m.clean_accuracy = static_cast<double>(m.clean_correct) / m.total;
  m.certified_accuracy = static_cast<double>(m.certified) / m.total;
  return m;
}

DatasetMetrics EvaluateDataset(std::span<const LabeledImage> items, const Classifier& classifier,
                               const MaskSet& masks, const PatchThreatModel& threat,
                               const EvaluateOptions& options) {
  Require(!items.empty(), "dataset is empty");
  DatasetEvaluator evaluator(classifier, masks, threat, options);
  for (const LabeledImage& item : items) evaluator.Evaluate(item.name, item.image, item.label);
  return evaluator.Finish();
}

}  // namespace patchshield
