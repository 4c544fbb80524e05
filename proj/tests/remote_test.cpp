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

#include "patchshield/remote.hpp"

#include <gtest/gtest.h>

#include <atomic>
#include <numeric>
#include <thread>

#include "httplib.h"
#include "patchshield/error.hpp"
#include "patchshield/protocol.hpp"
#include "test_util.hpp"

namespace patchshield {
namespace {

// Stand-in model server: argmax over per-channel means.
Label ArgmaxChannelMean(const Image& img) {
  const ImageGeometry& g = img.geometry();
  std::vector<double> sums(g.channels, 0.0);
  for (int i = 0; i < g.height; ++i) {
    for (int j = 0; j < g.width; ++j) {
      for (int c = 0; c < g.channels; ++c) sums[c] += img.at(i, j, c);
    }
  }
  return static_cast<Label>(std::max_element(sums.begin(), sums.end()) - sums.begin());
}

class StubServer {
 public:
  explicit StubServer(int fail_status = 0) {
    server_.Post("/predict", [this, fail_status](const httplib::Request& req,
                                                 httplib::Response& res) {
      ++requests_;
      if (fail_status == 200) {
        res.set_content("abc", "application/octet-stream");
        return;
      }
      if (fail_status != 0) {
        res.status = fail_status;
        res.set_content("model exploded", "text/plain");
        return;
      }
      try {
        std::vector<Label> labels;
        for (const Image& img : protocol::DecodeRequest(req.body)) {
          labels.push_back(ArgmaxChannelMean(img));
        }
        res.set_content(protocol::EncodeResponse(labels), "application/octet-stream");
      } catch (const Error& e) {
        res.status = 400;
        res.set_content(e.what(), "text/plain");
      }
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~StubServer() {
    server_.stop();
    thread_.join();
  }
  std::string url() const { return "http://127.0.0.1:" + std::to_string(port_); }
  int requests() const { return requests_; }

 private:
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
  std::atomic<int> requests_{0};
};

std::vector<Image> MakeImages(std::size_t n) {
  std::vector<Image> images;
  for (std::size_t k = 0; k < n; ++k) {
    Image img = Image::Filled({3, 2, 3}, 0.1f);
    img.set(0, 0, static_cast<int>(k % 3), 1.0f);
    images.push_back(std::move(img));
  }
  return images;
}

TEST(RemoteClassifier, LoopbackRoundTripsEveryImage) {
  StubServer server;
  RemoteClassifier remote(server.url(), {10, 4});
  const std::vector<Image> images = MakeImages(10);
  const std::vector<Label> labels = remote.PredictBatch(images);
  ASSERT_EQ(labels.size(), images.size());
  for (std::size_t k = 0; k < images.size(); ++k) {
    EXPECT_EQ(labels[k], static_cast<Label>(k % 3));
  }
  EXPECT_EQ(server.requests(), 3);  // 4 + 4 + 2
}

TEST(RemoteClassifier, OpenBackendUsesTheRemoteScheme) {
  StubServer server;
  const auto backend = OpenBackend("remote:" + server.url() + "/");
  EXPECT_EQ(backend->Predict(MakeImages(3)[2]), 2);
}

TEST(RemoteClassifier, ServerErrorsAreBackendUnavailable) {
  for (int status : {500, 200}) {
    StubServer server(status);
    RemoteClassifier remote(server.url());
    try {
      remote.PredictBatch(MakeImages(1));
      FAIL();
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::kBackendUnavailable);
      EXPECT_TRUE(e.is_environmental());
      if (status == 500) EXPECT_NE(std::string(e.what()).find("model exploded"), std::string::npos);
    }
  }
}

TEST(RemoteClassifier, UnreachableServerIsBackendUnavailable) {
  int port = 0;
  {
    httplib::Server probe;
    port = probe.bind_to_any_port("127.0.0.1");
  }
  RemoteClassifier remote("http://127.0.0.1:" + std::to_string(port), {2, 8});
  try {
    remote.PredictBatch(MakeImages(1));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kBackendUnavailable);
  }
}

}  // namespace
}  // namespace patchshield
