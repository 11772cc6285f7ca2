/*
 * Copyright 2026 The dispaudit Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace dispaudit {

// Run record embedded in every output directory. Identical command lines
// (plus SOURCE_DATE_EPOCH for the timestamp) produce byte-identical
// manifests, which the rerun-determinism tests rely on.
struct RunManifest {
  std::string command;
  std::vector<std::string> arguments;
  std::string tool_version;
  // ISO-8601 UTC; honors SOURCE_DATE_EPOCH so runs can be made reproducible.
  std::string timestamp;
  std::string config_hash;  // FNV-1a over config bytes, "none" without one
  std::string run_id;       // FNV-1a over command + arguments + config_hash

  static RunManifest make(const std::string& command,
                          const std::vector<std::string>& arguments,
                          const std::string& config_text);
};

// FNV-1a 64-bit, hex-encoded; the deterministic id/hash primitive used by
// manifests.
std::string fnv1a_hex(const std::string& bytes);

// Entry point behind the binary: parses args (excluding argv[0]) and runs
// one subcommand. Returns the process exit code: 0 ok, 1 usage/config
// error, 2 data error, 3 estimation error. Diagnostics go to err; summary
// data lines go to out; full reports go to files under --out.
int run_cli(const std::vector<std::string>& args, std::ostream& out,
            std::ostream& err);

}  // namespace dispaudit
