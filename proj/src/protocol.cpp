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

#include "patchshield/protocol.hpp"

#include <bit>
#include <cstring>

#include "patchshield/error.hpp"

namespace patchshield::protocol {
namespace {

void PutU32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

std::uint32_t GetU32(std::string_view bytes, std::size_t offset) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) {
    v |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[offset + i])) << (8 * i);
  }
  return v;
}

}  // namespace

std::string EncodeRequest(std::span<const Image> images) {
  std::string out(kMagic);
  const ImageGeometry g = images.empty() ? ImageGeometry{0, 0, 0} : images.front().geometry();
  PutU32(out, static_cast<std::uint32_t>(images.size()));
  PutU32(out, static_cast<std::uint32_t>(g.height));
  PutU32(out, static_cast<std::uint32_t>(g.width));
  PutU32(out, static_cast<std::uint32_t>(g.channels));
  out.reserve(kHeaderSize + images.size() * g.value_count() * 4);
  for (const Image& image : images) {
    if (image.geometry() != g) {
      Fail(ErrorKind::kGeometryMismatch, "all images in a batch must share one geometry");
    }
    for (float v : image.values()) PutU32(out, std::bit_cast<std::uint32_t>(v));
  }
  return out;
}

RequestHeader DecodeRequestHeader(std::string_view bytes) {
  if (bytes.size() < kHeaderSize || bytes.substr(0, 4) != kMagic) {
    Fail(ErrorKind::kMalformedImage, "request does not start with a PCP1 header");
  }
  RequestHeader h;
  h.count = GetU32(bytes, 4);
  h.geometry = {static_cast<int>(GetU32(bytes, 8)), static_cast<int>(GetU32(bytes, 12)),
                static_cast<int>(GetU32(bytes, 16))};
  return h;
}

std::vector<Image> DecodeRequest(std::string_view bytes) {
  const RequestHeader h = DecodeRequestHeader(bytes);
  std::vector<Image> images;
  if (h.count == 0) return images;
  h.geometry.Validate();
  const std::size_t per_image = h.geometry.value_count();
  if (bytes.size() != kHeaderSize + std::size_t{h.count} * per_image * 4) {
    Fail(ErrorKind::kMalformedImage, "request payload size does not match its header");
  }
  images.reserve(h.count);
  std::size_t offset = kHeaderSize;
  for (std::uint32_t n = 0; n < h.count; ++n) {
    std::vector<float> values(per_image);
    for (float& v : values) {
      v = std::bit_cast<float>(GetU32(bytes, offset));
      offset += 4;
    }
    images.emplace_back(h.geometry, std::move(values));
  }
  return images;
}

std::string EncodeResponse(std::span<const Label> labels) {
  std::string out;
  out.reserve(labels.size() * 4);
  for (Label l : labels) PutU32(out, static_cast<std::uint32_t>(l));
  return out;
}

std::vector<Label> DecodeResponse(std::string_view bytes, std::size_t expected) {
  if (bytes.size() != expected * 4) {
    Fail(ErrorKind::kBackendUnavailable,
         "response holds " + std::to_string(bytes.size()) + " bytes, expected " +
             std::to_string(expected * 4));
  }
  std::vector<Label> labels(expected);
  for (std::size_t i = 0; i < expected; ++i) {
    labels[i] = static_cast<Label>(GetU32(bytes, 4 * i));
  }
  return labels;
}

}  // namespace patchshield::protocol
