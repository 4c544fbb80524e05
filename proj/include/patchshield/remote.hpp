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

#ifndef PATCHSHIELD_REMOTE_HPP_
#define PATCHSHIELD_REMOTE_HPP_

#include <string>

#include "patchshield/classifier.hpp"

namespace patchshield {

// Client for a model server speaking the batch wire protocol over
// HTTP POST /predict. Each call opens its own connection, so concurrent
// batches are independent.
class RemoteClassifier final : public Classifier {
 public:
  explicit RemoteClassifier(std::string url, RemoteOptions options = {});

  std::vector<Label> PredictBatch(std::span<const Image> images) const override;

  const std::string& url() const { return url_; }

 private:
  std::vector<Label> SendChunk(std::span<const Image> images) const;

  std::string url_;
  RemoteOptions options_;
};

}  // namespace patchshield

#endif  // PATCHSHIELD_REMOTE_HPP_
