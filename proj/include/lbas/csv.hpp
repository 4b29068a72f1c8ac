// csv.hpp -- small RFC-4180-ish CSV reader/writer used by every stage file.

#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace lbas::csv {

using Row = std::vector<std::string>;

struct Table {
  Row header;
  std::vector<Row> rows;

  // Column index by name; -1 if absent.
  int column(const std::string& name) const;
};

// Parses CSV text. Handles quoted fields with embedded commas, quotes and
// newlines. CRLF and a missing final newline are accepted.
Table parse(const std::string& text);

Table read_file(const std::filesystem::path& path);

std::string escape(const std::string& field);

std::string format(const Table& table);

// Shortest round-trip decimal form (std::to_chars), so artifact files are
// byte-identical across runs.
std::string format_double(double v);

}  // namespace lbas::csv
