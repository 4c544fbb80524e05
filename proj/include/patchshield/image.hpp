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

#ifndef PATCHSHIELD_IMAGE_HPP_
#define PATCHSHIELD_IMAGE_HPP_

#include <filesystem>
#include <span>
#include <vector>

#include "patchshield/geometry.hpp"

namespace patchshield {

// Dense image with values in [0, 1], laid out row, then column, then channel.
class Image {
 public:
  Image() = default;
  Image(ImageGeometry geometry, std::vector<float> values);

  static Image Filled(const ImageGeometry& geometry, float value);

  const ImageGeometry& geometry() const { return geometry_; }
  std::span<const float> values() const { return values_; }

  float at(int row, int col, int channel = 0) const {
    return values_[Offset(row, col, channel)];
  }
  void set(int row, int col, int channel, float value);

  friend bool operator==(const Image&, const Image&) = default;

 private:
  std::size_t Offset(int row, int col, int channel) const {
    return (static_cast<std::size_t>(row) * geometry_.width + col) *
               geometry_.channels + channel;
  }

  ImageGeometry geometry_;
  std::vector<float> values_;
};

// x ⊙ m: pixels inside the mask rectangles take `fill` on every channel.
Image ApplyMask(const Image& image, const MaskSpec& mask, float fill = 0.0f);
void ApplyMaskInPlace(Image& image, const MaskSpec& mask, float fill = 0.0f);

// PNG (8-bit gray or RGB, alpha dropped) or the raw single-image float blob
// (wire header with count = 1), chosen by magic bytes.
Image LoadImage(const std::filesystem::path& path);
Image LoadPng(const std::filesystem::path& path);
void SavePng(const Image& image, const std::filesystem::path& path);
Image LoadRawImage(const std::filesystem::path& path);
void SaveRawImage(const Image& image, const std::filesystem::path& path);

}  // namespace patchshield

#endif  // PATCHSHIELD_IMAGE_HPP_
