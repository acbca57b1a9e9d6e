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


#ifndef NFVC_REPORT_H_
#define NFVC_REPORT_H_

#include <filesystem>
#include <string>
#include <vector>

#include "nfvc/matrix.h"

namespace nfvc::report {

class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header);

  // Cell count must match the header.
  void AddRow(std::vector<std::string> cells);
  std::size_t rows() const { return rows_.size(); }
  std::string ToString() const;
  void Write(const std::filesystem::path& path) const;

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

// Round-trip formatting for doubles.
std::string FormatDouble(double v);

struct ScatterPoint {
  double x = 0.0;
  double y = 0.0;
  bool is_new = false;
  std::string label;
};

// Standalone SVG with training points in blue and new points in orange.
std::string ScatterSvg(const std::vector<ScatterPoint>& points,
                       const std::string& title);
void WriteScatterSvg(const std::filesystem::path& path,
                     const std::vector<ScatterPoint>& points,
                     const std::string& title);

void WriteText(const std::filesystem::path& path, const std::string& text);

}  // namespace nfvc::report

#endif  // NFVC_REPORT_H_
