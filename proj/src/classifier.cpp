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

#include "patchshield/classifier.hpp"

#include <cmath>
#include <fstream>

#include "patchshield/error.hpp"
#include "patchshield/remote.hpp"

namespace patchshield {
namespace {

int Quantize(float v) {
  return static_cast<int>(std::lround(std::clamp(v, 0.0f, 1.0f) * 255.0f));
}

}  // namespace

TableClassifier::TableClassifier(int label_space_size, Label default_label,
                                 float mask_fill)
    : label_space_size_(label_space_size),
      default_label_(default_label),
      mask_fill_(mask_fill) {
  Require(label_space_size >= 1, "label space must hold at least one label");
  Require(mask_fill >= 0.0f && mask_fill <= 1.0f, "mask fill must lie in [0, 1]");
  CheckLabel(default_label);
}

void TableClassifier::CheckLabel(Label label) const {
  Require(label >= 0 && label < label_space_size_,
          "label " + std::to_string(label) + " outside label space of size " +
              std::to_string(label_space_size_));
}

std::string TableClassifier::KeyFor(const Image& image, float mask_fill) {
  static constexpr char kHex[] = "0123456789abcdef";
  const ImageGeometry& g = image.geometry();
  const int fill = Quantize(mask_fill);
  std::string key = std::to_string(g.height) + "x" + std::to_string(g.width) +
                    "x" + std::to_string(g.channels) + "|";
  key.reserve(key.size() + g.value_count() * 2);
  const std::span<const float> values = image.values();
  for (std::size_t p = 0; p < g.pixel_count(); ++p) {
    const auto pixel = values.subspan(p * g.channels, g.channels);
    const bool masked = std::all_of(pixel.begin(), pixel.end(),
                                    [fill](float v) { return Quantize(v) == fill; });
    if (masked) {
      key.push_back('-');
      continue;
    }
    for (float v : pixel) {
      const int q = Quantize(v);
      key.push_back(kHex[q >> 4]);
      key.push_back(kHex[q & 15]);
    }
  }
  return key;
}

void TableClassifier::Insert(const Image& image, Label label) {
  InsertKey(KeyFor(image, mask_fill_), label);
}

void TableClassifier::InsertKey(std::string key, Label label) {
  CheckLabel(label);
  entries_.insert_or_assign(std::move(key), label);
}

Label TableClassifier::Lookup(const Image& image) const {
  auto it = entries_.find(KeyFor(image, mask_fill_));
  return it == entries_.end() ? default_label_ : it->second;
}

std::vector<Label> TableClassifier::PredictBatch(std::span<const Image> images) const {
  std::vector<Label> labels;
  labels.reserve(images.size());
  for (const Image& image : images) labels.push_back(Lookup(image));
  return labels;
}

nlohmann::json TableClassifier::ToJson() const {
  nlohmann::json entries = nlohmann::json::object();
  for (const auto& [key, label] : entries_) entries[key] = label;
  return {{"label_space_size", label_space_size_},
          {"default_label", default_label_},
          {"mask_fill", mask_fill_},
          {"entries", std::move(entries)}};
}

TableClassifier TableClassifier::FromJson(const nlohmann::json& doc) {
  try {
    TableClassifier table(doc.at("label_space_size").get<int>(),
                          doc.at("default_label").get<Label>(),
                          doc.value("mask_fill", 0.0f));
    for (const auto& [key, label] : doc.at("entries").items()) {
      table.InsertKey(key, label.get<Label>());
    }
    return table;
  } catch (const nlohmann::json::exception& e) {
    Fail(ErrorKind::kInvalidArgument, std::string("malformed table classifier: ") + e.what());
  }
}

TableClassifier TableClassifier::Load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) Fail(ErrorKind::kIo, "cannot open " + path.string());
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    Fail(ErrorKind::kIo, path.string() + ": " + e.what());
  }
  return FromJson(doc);
}

void TableClassifier::Save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) Fail(ErrorKind::kIo, "cannot write " + path.string());
  out << ToJson().dump(1) << "\n";
}

std::vector<Label> FunctionClassifier::PredictBatch(std::span<const Image> images) const {
  std::vector<Label> labels;
  labels.reserve(images.size());
  for (const Image& image : images) labels.push_back(fn_(image));
  return labels;
}

std::unique_ptr<Classifier> OpenBackend(const std::string& spec,
                                        const RemoteOptions& remote) {
  const auto colon = spec.find(':');
  const std::string scheme = spec.substr(0, colon);
  if (colon == std::string::npos || colon + 1 == spec.size()) {
    Fail(ErrorKind::kInvalidArgument,
         "backend must be table:FILE or remote:URL, got '" + spec + "'");
  }
  const std::string target = spec.substr(colon + 1);
  if (scheme == "table") {
    return std::make_unique<TableClassifier>(TableClassifier::Load(target));
  }
  if (scheme == "remote") return std::make_unique<RemoteClassifier>(target, remote);
  Fail(ErrorKind::kInvalidArgument, "unknown backend kind '" + scheme + "'");
}

}  // namespace patchshield
