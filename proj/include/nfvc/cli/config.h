// Copyright (c) 2026 The NFVC Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#ifndef NFVC_CLI_CONFIG_H_
#define NFVC_CLI_CONFIG_H_

#include <filesystem>
#include <string>
#include <string_view>

#include "json.hpp"

namespace nfvc::cli {

// Accepts either a JSON object or "key = value" lines where each value is
// JSON. Bare words that are not valid JSON are taken as strings. Blank
// lines and lines starting with '#' are ignored.
nlohmann::json ParseConfigText(std::string_view text);
nlohmann::json LoadConfigFile(const std::filesystem::path& path);

// Applies `overrides` on top of `base`; keys absent from `base` raise
// ConfigError naming the key.
nlohmann::json MergeConfig(nlohmann::json base, const nlohmann::json& overrides);

// Writes config.json into `dir`.
void EchoConfig(const std::filesystem::path& dir, const nlohmann::json& config);

}  // namespace nfvc::cli

#endif  // NFVC_CLI_CONFIG_H_
