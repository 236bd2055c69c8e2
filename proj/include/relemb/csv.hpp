#pragma once

#include <istream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace relemb::csv {

// RFC 4180 style reader: quoted fields may contain the delimiter, doubled
// quotes and newlines. Records are returned one at a time.
class Reader {
public:
    Reader(std::istream& in, char delimiter = ',', char quote = '"');

    // Next record, or nullopt at end of input. Throws ParseError on an
    // unterminated quoted field.
    std::optional<std::vector<std::string>> next();

    // 1-based physical line where the last returned record started.
    std::size_t line() const { return record_line_; }

private:
    std::istream& in_;
    char delim_;
    char quote_;
    std::size_t line_ = 1;
    std::size_t record_line_ = 0;
};

std::vector<std::vector<std::string>> read_all(std::istream& in, char delimiter = ',');

// Quotes a field only when it contains the delimiter, a quote or a newline.
std::string escape(std::string_view field, char delimiter = ',');

void write_record(std::ostream& out, const std::vector<std::string>& fields, char delimiter = ',');

} // namespace relemb::csv
