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

#ifndef PATCHSHIELD_PROTOCOL_HPP_
#define PATCHSHIELD_PROTOCOL_HPP_

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "patchshield/classifier.hpp"
#include "patchshield/image.hpp"

// Batch prediction wire format.
//
// Request:  "PCP1" | u32 count | u32 height | u32 width | u32 channels |
//           count*height*width*channels f32 values
// Response: count i32 labels
//
// All integers and floats are little-endian.
namespace patchshield::protocol {

inline constexpr std::string_view kMagic = "PCP1";
inline constexpr std::size_t kHeaderSize = 4 + 4 * 4;

struct RequestHeader {
  std::uint32_t count = 0;
  ImageGeometry geometry;
};

std::string EncodeRequest(std::span<const Image> images);
RequestHeader DecodeRequestHeader(std::string_view bytes);
std::vector<Image> DecodeRequest(std::string_view bytes);

std::string EncodeResponse(std::span<const Label> labels);
std::vector<Label> DecodeResponse(std::string_view bytes, std::size_t expected);

}  // namespace patchshield::protocol

#endif  // PATCHSHIELD_PROTOCOL_HPP_
