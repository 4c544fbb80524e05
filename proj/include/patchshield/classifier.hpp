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

#ifndef PATCHSHIELD_CLASSIFIER_HPP_
#define PATCHSHIELD_CLASSIFIER_HPP_

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "json.hpp"
#include "patchshield/image.hpp"

namespace patchshield {

using Label = std::int32_t;

// Label oracle. Implementations must tolerate concurrent PredictBatch calls
// and return one label per image in input order.
class Classifier {
 public:
  virtual ~Classifier() = default;
  virtual std::vector<Label> PredictBatch(std::span<const Image> images) const = 0;

  Label Predict(const Image& image) const {
    return PredictBatch(std::span<const Image>(&image, 1)).front();
  }
};

// Lookup-table classifier keyed by the visible content of a masked image.
//
// Key format: "<H>x<W>x<C>|" followed by one token per pixel in row-major
// order: "-" when every channel quantises (8 bit) to the mask fill value,
// otherwise two lowercase hex digits per channel. Masked coordinates thus
// contribute nothing but their position.
class TableClassifier final : public Classifier {
 public:
  TableClassifier(int label_space_size, Label default_label,
                  float mask_fill = 0.0f);

  static std::string KeyFor(const Image& image, float mask_fill = 0.0f);

  void Insert(const Image& image, Label label);
  void InsertKey(std::string key, Label label);

  Label Lookup(const Image& image) const;
  std::vector<Label> PredictBatch(std::span<const Image> images) const override;

  int label_space_size() const { return label_space_size_; }
  Label default_label() const { return default_label_; }
  float mask_fill() const { return mask_fill_; }
  std::size_t size() const { return entries_.size(); }

  nlohmann::json ToJson() const;
  static TableClassifier FromJson(const nlohmann::json& doc);
  static TableClassifier Load(const std::filesystem::path& path);
  void Save(const std::filesystem::path& path) const;

 private:
  void CheckLabel(Label label) const;

  int label_space_size_;
  Label default_label_;
  float mask_fill_;
  std::unordered_map<std::string, Label> entries_;
};

// Adapts a per-image function.
class FunctionClassifier final : public Classifier {
 public:
  explicit FunctionClassifier(std::function<Label(const Image&)> fn)
      : fn_(std::move(fn)) {}
  std::vector<Label> PredictBatch(std::span<const Image> images) const override;

 private:
  std::function<Label(const Image&)> fn_;
};

// Counts single-image evaluations passed through to `inner`.
class CallCounter final : public Classifier {
 public:
  explicit CallCounter(const Classifier& inner) : inner_(inner) {}

  std::vector<Label> PredictBatch(std::span<const Image> images) const override {
    count_.fetch_add(images.size(), std::memory_order_relaxed);
    return inner_.PredictBatch(images);
  }
  std::size_t count() const { return count_.load(std::memory_order_relaxed); }
  void Reset() { count_.store(0); }

 private:
  const Classifier& inner_;
  mutable std::atomic<std::size_t> count_{0};
};

struct RemoteOptions {
  int timeout_seconds = 60;
  std::size_t max_batch = 256;  // images per HTTP request
};

// Opens "table:<path>" or "remote:<url>".
std::unique_ptr<Classifier> OpenBackend(const std::string& spec,
                                        const RemoteOptions& remote = {});

}  // namespace patchshield

#endif  // PATCHSHIELD_CLASSIFIER_HPP_
