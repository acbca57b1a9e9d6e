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

#include "nfvc/report.h"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

#include "nfvc/error.h"

namespace nfvc::report {
namespace {

std::string CsvEscape(const std::string& cell) {
  if (cell.find_first_of(",\"\n") == std::string::npos) return cell;
  std::string out = "\"";
  for (char c : cell) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string XmlEscape(const std::string& text) {
  std::string out;
  for (char c : text) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

CsvTable::CsvTable(std::vector<std::string> header)
    : header_(std::move(header)) {}

void CsvTable::AddRow(std::vector<std::string> cells) {
  if (cells.size() != header_.size()) {
    throw ShapeError("csv row has " + std::to_string(cells.size()) +
                     " cells, header has " + std::to_string(header_.size()));
  }
  rows_.push_back(std::move(cells));
}

std::string CsvTable::ToString() const {
  std::ostringstream out;
  auto emit = [&out](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out << ',';
      out << CsvEscape(cells[i]);
    }
    out << '\n';
  };
  emit(header_);
  for (const auto& row : rows_) emit(row);
  return out.str();
}

void CsvTable::Write(const std::filesystem::path& path) const {
  WriteText(path, ToString());
}

std::string FormatDouble(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, end);
}

std::string ScatterSvg(const std::vector<ScatterPoint>& points,
                       const std::string& title) {
  const double width = 640, height = 480, margin = 40;
  double xmin = 0, xmax = 1, ymin = 0, ymax = 1;
  if (!points.empty()) {
    xmin = xmax = points.front().x;
    ymin = ymax = points.front().y;
    for (const ScatterPoint& p : points) {
      xmin = std::min(xmin, p.x);
      xmax = std::max(xmax, p.x);
      ymin = std::min(ymin, p.y);
      ymax = std::max(ymax, p.y);
    }
  }
  if (xmax - xmin < 1e-12) { xmin -= 1; xmax += 1; }
  if (ymax - ymin < 1e-12) { ymin -= 1; ymax += 1; }
  auto sx = [&](double x) {
    return margin + (x - xmin) / (xmax - xmin) * (width - 2 * margin);
  };
  auto sy = [&](double y) {
    return height - margin - (y - ymin) / (ymax - ymin) * (height - 2 * margin);
  };

  std::ostringstream out;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width
      << "\" height=\"" << height << "\" viewBox=\"0 0 " << width << ' '
      << height << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<text x=\"" << margin << "\" y=\"24\" font-family=\"sans-serif\" "
      << "font-size=\"14\">" << XmlEscape(title) << "</text>\n";
  out << "<rect x=\"" << margin << "\" y=\"" << margin << "\" width=\""
      << width - 2 * margin << "\" height=\"" << height - 2 * margin
      << "\" fill=\"none\" stroke=\"#999\"/>\n";
  // Training points first so new voices are drawn on top.
  for (int pass = 0; pass < 2; ++pass) {
    for (const ScatterPoint& p : points) {
      if (p.is_new != (pass == 1)) continue;
      out << "<circle cx=\"" << sx(p.x) << "\" cy=\"" << sy(p.y)
          << "\" r=\"4\" fill=\"" << (p.is_new ? "#e6550d" : "#3182bd")
          << "\" fill-opacity=\"0.75\"><title>" << XmlEscape(p.label)
          << "</title></circle>\n";
    }
  }
  const double ly = height - 12;
  out << "<circle cx=\"" << margin << "\" cy=\"" << ly - 4
      << "\" r=\"4\" fill=\"#3182bd\"/>\n"
      << "<text x=\"" << margin + 8 << "\" y=\"" << ly
      << "\" font-family=\"sans-serif\" font-size=\"12\">training</text>\n"
      << "<circle cx=\"" << margin + 90 << "\" cy=\"" << ly - 4
      << "\" r=\"4\" fill=\"#e6550d\"/>\n"
      << "<text x=\"" << margin + 98 << "\" y=\"" << ly
      << "\" font-family=\"sans-serif\" font-size=\"12\">new</text>\n";
  out << "</svg>\n";
  return out.str();
}

void WriteScatterSvg(const std::filesystem::path& path,
                     const std::vector<ScatterPoint>& points,
                     const std::string& title) {
  WriteText(path, ScatterSvg(points, title));
}

void WriteText(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw DataError("cannot write " + path.string());
}

}  // namespace nfvc::report
