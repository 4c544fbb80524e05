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

#ifndef PATCHSHIELD_ERROR_HPP_
#define PATCHSHIELD_ERROR_HPP_

#include <stdexcept>
#include <string>
#include <string_view>

namespace patchshield {

enum class ErrorKind {
  kInvalidArgument,
  kGeometryMismatch,
  kMalformedImage,
  kResourceLimit,
  kConstructionFailure,
  kBackendUnavailable,
  kIo,
};

std::string_view ToString(ErrorKind kind);

// All library failures are reported through this exception type; the kind
// decides how callers (the CLI in particular) classify them.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

  // True for failures caused by the environment rather than the request.
  bool is_environmental() const noexcept {
    return kind_ == ErrorKind::kBackendUnavailable || kind_ == ErrorKind::kIo;
  }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void Fail(ErrorKind kind, const std::string& message) {
  throw Error(kind, message);
}

inline void Require(bool condition, const std::string& message) {
  if (!condition) Fail(ErrorKind::kInvalidArgument, message);
}

}  // namespace patchshield

#endif  // PATCHSHIELD_ERROR_HPP_
