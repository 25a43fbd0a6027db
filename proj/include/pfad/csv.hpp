#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace pfad {

// A CSV file held as strings. `lines` keeps each data row's source text so
// callers can derive row identity from it.
struct RawTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> lines;
};

// RFC 4180 style fields: commas, double-quote quoting, "" escapes.
// Quoted fields may not span lines (tshark exports never do).
std::vector<std::string> split_csv_line(std::string_view line);

// Throws IoError when the file cannot be opened, DataError on ragged rows.
RawTable read_csv(const std::string& path);

std::string csv_escape(std::string_view field);
std::string join_csv(const std::vector<std::string>& fields);

}  // namespace pfad
