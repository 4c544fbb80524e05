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

#include "patchshield/image.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <string>

#include "patchshield/error.hpp"
#include "patchshield/protocol.hpp"

namespace patchshield {

Image::Image(ImageGeometry geometry, std::vector<float> values)
    : geometry_(geometry), values_(std::move(values)) {
  geometry_.Validate();
  if (values_.size() != geometry_.value_count()) {
    Fail(ErrorKind::kMalformedImage,
         "image holds " + std::to_string(values_.size()) + " values, expected " +
             std::to_string(geometry_.value_count()));
  }
  for (float v : values_) {
    if (!(v >= 0.0f && v <= 1.0f)) {
      Fail(ErrorKind::kMalformedImage,
           "pixel value " + std::to_string(v) + " outside [0, 1]");
    }
  }
}

Image Image::Filled(const ImageGeometry& geometry, float value) {
  return Image(geometry, std::vector<float>(geometry.value_count(), value));
}

void Image::set(int row, int col, int channel, float value) {
  if (!(value >= 0.0f && value <= 1.0f)) {
    Fail(ErrorKind::kMalformedImage, "pixel value outside [0, 1]");
  }
  values_[Offset(row, col, channel)] = value;
}

void ApplyMaskInPlace(Image& image, const MaskSpec& mask, float fill) {
  const ImageGeometry& g = image.geometry();
  if (!mask.FitsIn(g)) {
    Fail(ErrorKind::kGeometryMismatch, "mask extends beyond a " +
                                           std::to_string(g.height) + "x" +
                                           std::to_string(g.width) + " image");
  }
  for (const Rect& r : mask.rects()) {
    for (int i = r.top; i < r.bottom(); ++i) {
      for (int j = r.left; j < r.right(); ++j) {
        for (int c = 0; c < g.channels; ++c) image.set(i, j, c, fill);
      }
    }
  }
}

Image ApplyMask(const Image& image, const MaskSpec& mask, float fill) {
  Image out = image;
  ApplyMaskInPlace(out, mask, fill);
  return out;
}

// ---------------------------------------------------------------------------
// File formats

namespace {

std::string ReadFile(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) Fail(ErrorKind::kIo, "cannot open " + path.string());
  return std::string(std::istreambuf_iterator<char>(in), {});
}

void WriteFile(const std::filesystem::path& path, std::string_view bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) Fail(ErrorKind::kIo, "cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) Fail(ErrorKind::kIo, "short write to " + path.string());
}

}  // namespace

Image LoadPng(const std::filesystem::path& path) {
  png_image png{};
  png.version = PNG_IMAGE_VERSION;
  const std::string bytes = ReadFile(path);
  if (!png_image_begin_read_from_memory(&png, bytes.data(), bytes.size())) {
    Fail(ErrorKind::kMalformedImage, path.string() + ": " + png.message);
  }
  const bool color = (png.format & PNG_FORMAT_FLAG_COLOR) != 0;
  png.format = color ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  const ImageGeometry g{static_cast<int>(png.height), static_cast<int>(png.width),
                        color ? 3 : 1};
  std::vector<png_byte> raw(PNG_IMAGE_SIZE(png));
  if (!png_image_finish_read(&png, nullptr, raw.data(), 0, nullptr)) {
    png_image_free(&png);
    Fail(ErrorKind::kMalformedImage, path.string() + ": " + png.message);
  }
  std::vector<float> values(raw.size());
  std::transform(raw.begin(), raw.end(), values.begin(),
                 [](png_byte b) { return static_cast<float>(b) / 255.0f; });
  return Image(g, std::move(values));
}

void SavePng(const Image& image, const std::filesystem::path& path) {
  const ImageGeometry& g = image.geometry();
  Require(g.channels == 1 || g.channels == 3, "PNG output needs 1 or 3 channels");
  png_image png{};
  png.version = PNG_IMAGE_VERSION;
  png.width = static_cast<png_uint_32>(g.width);
  png.height = static_cast<png_uint_32>(g.height);
  png.format = g.channels == 3 ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  std::vector<png_byte> raw(image.values().size());
  std::transform(image.values().begin(), image.values().end(), raw.begin(),
                 [](float v) { return static_cast<png_byte>(std::lround(v * 255.0f)); });
  if (!png_image_write_to_file(&png, path.string().c_str(), 0, raw.data(), 0, nullptr)) {
    Fail(ErrorKind::kIo, path.string() + ": " + png.message);
  }
}

Image LoadRawImage(const std::filesystem::path& path) {
  const std::string bytes = ReadFile(path);
  std::vector<Image> images = protocol::DecodeRequest(bytes);
  if (images.size() != 1) {
    Fail(ErrorKind::kMalformedImage,
         path.string() + ": raw image files must hold exactly one image");
  }
  return std::move(images.front());
}

void SaveRawImage(const Image& image, const std::filesystem::path& path) {
  WriteFile(path, protocol::EncodeRequest(std::span<const Image>(&image, 1)));
}

Image LoadImage(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) Fail(ErrorKind::kIo, "cannot open " + path.string());
  char magic[4] = {};
  in.read(magic, 4);
  if (in.gcount() == 4 && std::string_view(magic, 4) == protocol::kMagic) {
    return LoadRawImage(path);
  }
  return LoadPng(path);
}

}  // namespace patchshield
