#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace coldrec::data {

// Splits one CSV record. Fields may be double-quoted, with "" for a literal
// quote. A trailing CR is dropped. Throws ParseError(line) on an unterminated
// quote.
std::vector<std::string> split_csv_line(const std::string& line, std::size_t line_number);

// Quotes the field only when it contains a comma, quote, CR or LF.
std::string csv_field(const std::string& value);
std::string csv_record(const std::vector<std::string>& fields);

}  // namespace coldrec::data
