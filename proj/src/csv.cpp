#include "vsmactr/csv.hpp"

#include "vsmactr/error.hpp"

namespace vsmactr::csv {

std::string escape(std::string_view field)
{
    if (field.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(field);
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

std::string format_row(const Row& row)
{
    std::string out;
    for (std::size_t i = 0; i < row.size(); ++i) {
        if (i) out += ',';
        out += escape(row[i]);
    }
    out += '\n';
    return out;
}

std::vector<Row> parse(std::string_view text)
{
    std::vector<Row> rows;
    Row row;
    std::string field;
    bool quoted = false;
    bool was_quoted = false;
    bool any = false;
    std::size_t line = 1;
    auto end_field = [&] {
        row.push_back(std::move(field));
        field.clear();
        was_quoted = false;
    };
    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                if (c == '\n') ++line;
                field += c;
            }
            continue;
        }
        any = true;
        switch (c) {
        case '"':
            if (!field.empty() || was_quoted) {
                throw Error(Errc::parse_error, "csv line " + std::to_string(line) + ": stray quote");
            }
            quoted = was_quoted = true;
            break;
        case ',': end_field(); break;
        case '\r':
            if (i + 1 < text.size() && text[i + 1] == '\n') break;
            field += c;
            break;
        case '\n':
            end_field();
            rows.push_back(std::move(row));
            row.clear();
            any = false;
            ++line;
            break;
        default:
            if (was_quoted) throw Error(Errc::parse_error, "csv line " + std::to_string(line) + ": text after quote");
            field += c;
        }
    }
    if (quoted) throw Error(Errc::parse_error, "csv: unterminated quoted field");
    if (any || !row.empty() || !field.empty()) {
        end_field();
        rows.push_back(std::move(row));
    }
    return rows;
}

} // namespace vsmactr::csv
