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

#include <gtest/gtest.h>

#include <fstream>
#include <random>

#include "patchshield/error.hpp"
#include "test_util.hpp"

namespace patchshield {
namespace {

Image RandomImage(const ImageGeometry& g, std::mt19937_64& rng) {
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  std::vector<float> v(g.value_count());
  for (float& x : v) x = u(rng);
  return Image(g, std::move(v));
}

TEST(Image, RejectsBadValuesAndSizes) {
  const ImageGeometry g{2, 2, 1};
  EXPECT_THROW(Image(g, {0.f, 0.f, 0.f}), Error);
  try {
    Image(g, {0.f, 0.f, 1.5f, 0.f});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kMalformedImage);
  }
  EXPECT_THROW(Image(g, {0.f, 0.f, std::nanf(""), 0.f}), Error);
  EXPECT_THROW((Image(ImageGeometry{0, 2, 1}, {})), Error);
}

TEST(Image, ApplyMaskZeroesExactlyTheRegion) {
  const ImageGeometry g{4, 5, 3};
  const Image img = Image::Filled(g, 0.5f);
  const MaskSpec mask({{1, 1, 2, 3}});
  const Image out = ApplyMask(img, mask, 0.25f);
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 5; ++j) {
      const bool inside = i >= 1 && i < 3 && j >= 1 && j < 4;
      for (int c = 0; c < 3; ++c) EXPECT_EQ(out.at(i, j, c), inside ? 0.25f : 0.5f);
    }
  }
}

TEST(Image, MaskingCommutesAndIsIdempotent) {
  std::mt19937_64 rng(7);
  const ImageGeometry g{6, 6, 2};
  for (int trial = 0; trial < 50; ++trial) {
    const Image img = RandomImage(g, rng);
    std::uniform_int_distribution<int> pos(0, 4), len(1, 2);
    const MaskSpec a({{pos(rng), pos(rng), len(rng), len(rng)}});
    const MaskSpec b({{pos(rng), pos(rng), len(rng), len(rng)}});
    const Image ab = ApplyMask(ApplyMask(img, a), b);
    EXPECT_EQ(ab, ApplyMask(ApplyMask(img, b), a));
    EXPECT_EQ(ab, ApplyMask(img, a.Union(b)));
    EXPECT_EQ(ApplyMask(ApplyMask(img, a), a), ApplyMask(img, a));
  }
}

TEST(Image, MaskOutsideTheImageIsAGeometryMismatch) {
  const Image img = Image::Filled({3, 3, 1}, 0.f);
  try {
    ApplyMask(img, MaskSpec({{2, 2, 2, 2}}));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kGeometryMismatch);
  }
}

TEST(ImageFiles, RawRoundTripMatchesFixture) {
  const std::filesystem::path fixture =
      std::filesystem::path(PATCHSHIELD_FIXTURE_DIR) / "image_2x2x3.raw";
  const Image img = LoadImage(fixture);
  EXPECT_EQ(img.geometry(), (ImageGeometry{2, 2, 3}));
  EXPECT_EQ(img.at(0, 0, 2), 1.0f);
  EXPECT_EQ(img.at(1, 1, 1), 0.125f);
  const auto dir = testing::MakeTempDir("raw");
  SaveRawImage(img, dir / "copy.raw");
  EXPECT_EQ(testing::ReadFileBytes(dir / "copy.raw"), testing::ReadFileBytes(fixture));
  std::filesystem::remove_all(dir);
}

TEST(ImageFiles, PngRoundTripQuantisesTo8Bits) {
  std::mt19937_64 rng(3);
  const auto dir = testing::MakeTempDir("png");
  for (int channels : {1, 3}) {
    const Image img = RandomImage({5, 7, channels}, rng);
    SavePng(img, dir / "x.png");
    const Image back = LoadImage(dir / "x.png");
    ASSERT_EQ(back.geometry(), img.geometry());
    for (std::size_t i = 0; i < img.values().size(); ++i) {
      EXPECT_NEAR(back.values()[i], img.values()[i], 0.5f / 255.0f + 1e-6f);
    }
  }
  std::filesystem::remove_all(dir);
}

TEST(ImageFiles, ErrorsAreClassified) {
  const auto dir = testing::MakeTempDir("bad");
  try {
    LoadImage(dir / "missing.png");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kIo);
  }
  std::ofstream(dir / "junk.png") << "not an image";
  try {
    LoadImage(dir / "junk.png");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kMalformedImage);
  }
  std::filesystem::remove_all(dir);
}

}  // namespace
}  // namespace patchshield
