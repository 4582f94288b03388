// Copyright 2026 The spilldid Authors
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

#pragma once

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace spilldid::csv {

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  // Index of a header column, or -1.
  int column(std::string_view name) const;
};

// Reads a comma-separated file with a header row. Double-quoted fields may
// contain commas and doubled quotes. Throws Error(kIo) when unreadable.
Table read(const std::string& path);
Table parse(std::istream& in);

std::vector<std::string> split_line(std::string_view line);

// Shortest decimal text that parses back to the same double.
std::string format_double(double value);

// Strict numeric parse of the whole field; returns false on failure.
bool parse_double(std::string_view text, double& out);

std::string quote_if_needed(std::string_view field);

}  // namespace spilldid::csv
