#include "relemb/csv.hpp"

#include "relemb/error.hpp"

#include <ostream>
#include <sstream>

namespace relemb::csv {

Reader::Reader(std::istream& in, char delimiter, char quote)
    : in_(in), delim_(delimiter), quote_(quote) {}

std::optional<std::vector<std::string>> Reader::next() {
    if (in_.peek() == std::char_traits<char>::eof())
        return std::nullopt;

    record_line_ = line_;
    std::vector<std::string> fields;
    std::string field;
    bool quoted = false;
    bool field_was_quoted = false;

    while (true) {
        int c = in_.get();
        if (c == std::char_traits<char>::eof()) {
            if (quoted)
                throw ParseError("unterminated quoted field starting at line " +
                                 std::to_string(record_line_));
            fields.push_back(std::move(field));
            return fields;
        }
        char ch = static_cast<char>(c);
        if (quoted) {
            if (ch == quote_) {
                if (in_.peek() == quote_) {
                    in_.get();
                    field.push_back(quote_);
                } else {
                    quoted = false;
                }
            } else {
                if (ch == '\n')
                    ++line_;
                field.push_back(ch);
            }
            continue;
        }
        if (ch == quote_ && field.empty() && !field_was_quoted) {
            quoted = true;
            field_was_quoted = true;
        } else if (ch == delim_) {
            fields.push_back(std::move(field));
            field.clear();
            field_was_quoted = false;
        } else if (ch == '\r' && in_.peek() == '\n') {
            continue;
        } else if (ch == '\n') {
            ++line_;
            fields.push_back(std::move(field));
            return fields;
        } else {
            field.push_back(ch);
        }
    }
}

std::vector<std::vector<std::string>> read_all(std::istream& in, char delimiter) {
    Reader reader(in, delimiter);
    std::vector<std::vector<std::string>> out;
    while (auto rec = reader.next())
        out.push_back(std::move(*rec));
    return out;
}

std::string escape(std::string_view field, char delimiter) {
    bool needs = field.find_first_of(std::string{delimiter, '"', '\n', '\r'}) != std::string_view::npos;
    if (!needs)
        return std::string(field);
    std::string out = "\"";
    for (char c : field) {
        if (c == '"')
            out.push_back('"');
        out.push_back(c);
    }
    out.push_back('"');
    return out;
}

void write_record(std::ostream& out, const std::vector<std::string>& fields, char delimiter) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i)
            out << delimiter;
        out << escape(fields[i], delimiter);
    }
    out << '\n';
}

} // namespace relemb::csv
