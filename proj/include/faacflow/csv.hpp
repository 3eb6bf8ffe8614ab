#pragma once

#include <istream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace faacflow::csv {

/// Reads one line, accepting LF or CRLF endings. Returns false at EOF.
bool read_line(std::istream& in, std::string& line);

/// Splits a comma-separated line into fields. Double-quoted fields may
/// contain commas; a doubled quote inside them is an escaped quote.
/// `fields` is cleared and reused to avoid reallocating per row.
void split(std::string_view line, std::vector<std::string>& fields);

/// Quotes a field if it contains a comma, quote or newline.
std::string escape(std::string_view field);

/// Strict numeric parse: the whole token must be a finite number.
std::optional<double> parse_number(std::string_view token);

/// Shortest representation that parses back to the same double.
std::string format_exact(double value);

/// printf-style %.{digits}g formatting.
std::string format_sig(double value, int digits);

}  // namespace faacflow::csv
