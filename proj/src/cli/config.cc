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

#include "nfvc/cli/config.h"

#include <sstream>

#include "nfvc/binary_io.h"
#include "nfvc/error.h"

namespace nfvc::cli {
namespace {

std::string Trim(std::string_view s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string_view::npos) return "";
  const auto end = s.find_last_not_of(" \t\r");
  return std::string(s.substr(begin, end - begin + 1));
}

}  // namespace

nlohmann::json ParseConfigText(std::string_view text) {
  const std::string trimmed = Trim(text);
  if (!trimmed.empty() && trimmed.front() == '{') {
    try {
      return nlohmann::json::parse(trimmed);
    } catch (const nlohmann::json::parse_error& e) {
      throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
  }
  nlohmann::json out = nlohmann::json::object();
  std::istringstream lines{std::string(text)};
  std::string line;
  int number = 0;
  while (std::getline(lines, line)) {
    ++number;
    const std::string body = Trim(line);
    if (body.empty() || body.front() == '#') continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(number) +
                        ": expected key = value");
    }
    const std::string key = Trim(std::string_view(body).substr(0, eq));
    const std::string value = Trim(std::string_view(body).substr(eq + 1));
    if (key.empty()) {
      throw ConfigError("config line " + std::to_string(number) +
                        ": empty key");
    }
    if (out.contains(key)) {
      throw ConfigError("config key '" + key + "' given twice");
    }
    nlohmann::json parsed = nlohmann::json::parse(value, nullptr, false);
    out[key] = parsed.is_discarded() ? nlohmann::json(value) : parsed;
  }
  return out;
}

nlohmann::json LoadConfigFile(const std::filesystem::path& path) {
  std::string bytes;
  try {
    bytes = ReadFileBytes(path);
  } catch (const DataError& e) {
    throw ConfigError(std::string("cannot read config: ") + e.what());
  }
  return ParseConfigText(bytes);
}

nlohmann::json MergeConfig(nlohmann::json base,
                           const nlohmann::json& overrides) {
  for (const auto& [key, value] : overrides.items()) {
    if (!base.contains(key)) {
      throw ConfigError("unknown config key '" + key + "'");
    }
    base[key] = value;
  }
  return base;
}

void EchoConfig(const std::filesystem::path& dir,
                const nlohmann::json& config) {
  WriteFileBytes(dir / "config.json", config.dump(2) + "\n");
}

}  // namespace nfvc::cli
