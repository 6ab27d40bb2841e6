#pragma once

#include "cattest/contingency.hpp"
#include "cattest/error.hpp"

#include <algorithm>
#include <istream>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace cattest {

/// Header plus string cells. Comma separated, double quotes with "" escapes, CRLF tolerated.
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    std::optional<std::size_t> column_index(std::string_view name) const {
        const auto it = std::find(header.begin(), header.end(), name);
        if (it == header.end()) {
            return std::nullopt;
        }
        return static_cast<std::size_t>(it - header.begin());
    }
};

namespace detail {

// Reads one record; returns false at end of input. Quoted fields may span lines.
inline bool read_csv_record(std::istream& in, std::vector<std::string>& fields) {
    fields.clear();
    std::string field;
    bool quoted = false;
    bool any = false;
    char ch = 0;
    while (in.get(ch)) {
        any = true;
        if (quoted) {
            if (ch == '"') {
                if (in.peek() == '"') {
                    in.get(ch);
                    field.push_back('"');
                } else {
                    quoted = false;
                }
            } else {
                field.push_back(ch);
            }
            continue;
        }
        if (ch == '"') {
            quoted = true;
        } else if (ch == ',') {
            fields.push_back(std::move(field));
            field.clear();
        } else if (ch == '\n') {
            break;
        } else if (ch != '\r') {
            field.push_back(ch);
        }
    }
    if (quoted) {
        throw InputError("unterminated quoted CSV field");
    }
    if (!any) {
        return false;
    }
    fields.push_back(std::move(field));
    return true;
}

} // namespace detail

inline CsvTable read_csv(std::istream& in) {
    CsvTable table;
    if (!detail::read_csv_record(in, table.header)) {
        throw InputError("CSV input is empty; a header row is required");
    }
    if (!table.header.empty() && table.header.front().starts_with("\xEF\xBB\xBF")) {
        table.header.front().erase(0, 3);
    }
    std::vector<std::string> fields;
    std::size_t line = 1;
    while (detail::read_csv_record(in, fields)) {
        ++line;
        if (fields.size() == 1 && fields.front().empty()) {
            continue;
        }
        if (fields.size() != table.header.size()) {
            throw InputError("CSV record " + std::to_string(line) + " has " + std::to_string(fields.size()) + " fields, expected " +
                             std::to_string(table.header.size()));
        }
        table.rows.push_back(fields);
    }
    return table;
}

/// Codes follow the byte-wise lexicographic order of the distinct labels.
struct EncodedColumn {
    CategoryVector codes;
    std::vector<std::string> labels;
};

inline EncodedColumn encode_labels(const std::vector<std::string>& values) {
    std::map<std::string, int> levels;
    for (const auto& v : values) {
        levels.emplace(v, 0);
    }
    std::vector<std::string> labels;
    int next = 0;
    for (auto& [label, code] : levels) {
        code = next++;
        labels.push_back(label);
    }
    std::vector<int> codes;
    codes.reserve(values.size());
    for (const auto& v : values) {
        codes.push_back(levels.at(v));
    }
    return EncodedColumn{CategoryVector(std::move(codes), std::max(1, next)), std::move(labels)};
}

inline EncodedColumn encode_column(const CsvTable& table, std::size_t column) {
    std::vector<std::string> values;
    values.reserve(table.rows.size());
    for (const auto& row : table.rows) {
        values.push_back(row.at(column));
    }
    return encode_labels(values);
}

} // namespace cattest
