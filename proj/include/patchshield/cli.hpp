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

#ifndef PATCHSHIELD_CLI_HPP_
#define PATCHSHIELD_CLI_HPP_

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

namespace patchshield::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitDomain = 1;
inline constexpr int kExitIo = 2;

// Settings shared by the subcommands. Sources, lowest precedence first:
// the JSON file given by --config, PATCHSHIELD_BACKEND_URL and
// PATCHSHIELD_PARALLELISM, then command-line flags.
struct Config {
  std::optional<std::string> backend;  // "table:FILE" or "remote:URL"
  std::optional<std::string> masks;
  std::optional<int> patch_h;
  std::optional<int> patch_w;
  std::optional<int> patches;
  std::optional<std::string> algo;
  std::optional<std::size_t> parallelism;
  std::optional<float> fill;
  std::optional<std::size_t> cap;
  std::optional<std::uint64_t> seed;

  static Config FromJson(const nlohmann::json& doc);
  static Config FromEnvironment(const std::map<std::string, std::string>& env);
  // Fields set in `over` replace those in *this.
  void OverlayWith(const Config& over);
};

std::map<std::string, std::string> ProcessEnvironment();

// Runs one invocation (args excludes the program name). Machine-readable
// JSON goes to `out`, diagnostics to `err`.
int Run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err,
        const std::map<std::string, std::string>& env);

}  // namespace patchshield::cli

#endif  // PATCHSHIELD_CLI_HPP_
