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

#include "patchshield/error.hpp"

namespace patchshield {

std::string_view ToString(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kInvalidArgument: return "invalid-argument";
    case ErrorKind::kGeometryMismatch: return "geometry-mismatch";
    case ErrorKind::kMalformedImage: return "malformed-image";
    case ErrorKind::kResourceLimit: return "resource-limit";
    case ErrorKind::kConstructionFailure: return "construction-failure";
    case ErrorKind::kBackendUnavailable: return "backend-unavailable";
    case ErrorKind::kIo: return "io";
  }
  return "unknown";
}

}  // namespace patchshield
