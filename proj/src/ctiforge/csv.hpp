#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace ctiforge::csv {

struct Row {
  std::size_t line = 0;  // 1-based line the record starts on
  std::vector<std::string> fields;
};

// RFC 4180 records: comma separated, double-quoted fields may hold commas,
// newlines and doubled quotes. CRLF and LF line endings are both accepted.
// Blank lines are skipped. Throws ParseError on an unterminated quote or
// stray characters after a closing quote.
std::vector<Row> parse(std::string_view text);

// Quotes a field when it contains a comma, quote or line break.
std::string escape(std::string_view field);

}  // namespace ctiforge::csv
