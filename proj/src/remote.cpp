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

#include "httplib.h"
#include "patchshield/error.hpp"
#include "patchshield/protocol.hpp"

namespace patchshield {

RemoteClassifier::RemoteClassifier(std::string url, RemoteOptions options)
    : url_(std::move(url)), options_(options) {
  while (!url_.empty() && url_.back() == '/') url_.pop_back();
  Require(url_.rfind("http://", 0) == 0,
          "remote backend URL must start with http://, got '" + url_ + "'");
  Require(options_.max_batch >= 1, "remote batch size must be >= 1");
}

std::vector<Label> RemoteClassifier::PredictBatch(std::span<const Image> images) const {
  std::vector<Label> labels;
  labels.reserve(images.size());
  for (std::size_t begin = 0; begin < images.size(); begin += options_.max_batch) {
    const std::size_t n = std::min(options_.max_batch, images.size() - begin);
    const std::vector<Label> chunk = SendChunk(images.subspan(begin, n));
    labels.insert(labels.end(), chunk.begin(), chunk.end());
  }
  return labels;
}

std::vector<Label> RemoteClassifier::SendChunk(std::span<const Image> images) const {
  const std::string body = protocol::EncodeRequest(images);
  httplib::Client client(url_);
  client.set_connection_timeout(options_.timeout_seconds);
  client.set_read_timeout(options_.timeout_seconds);
  client.set_write_timeout(options_.timeout_seconds);
  httplib::Result res = client.Post("/predict", body, "application/octet-stream");
  if (!res) {
    Fail(ErrorKind::kBackendUnavailable,
         "POST " + url_ + "/predict failed: " + httplib::to_string(res.error()));
  }
  if (res->status != 200) {
    Fail(ErrorKind::kBackendUnavailable,
         "model server returned HTTP " + std::to_string(res->status) + ": " + res->body);
  }
  return protocol::DecodeResponse(res->body, images.size());
}

}  // namespace patchshield
