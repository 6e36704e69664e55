#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace vsmactr::csv {

using Row = std::vector<std::string>;

/// RFC 4180: fields with a comma, quote, CR or LF are quoted, quotes doubled.
std::string escape(std::string_view field);
std::string format_row(const Row& row);

/// Parses a whole document; quoted fields may span lines. A trailing newline
/// does not produce an empty row. Throws Error{parse_error}.
std::vector<Row> parse(std::string_view text);

} // namespace vsmactr::csv
