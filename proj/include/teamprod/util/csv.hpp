#pragma once

#include <teamprod/error.hpp>

#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace teamprod::csv {

using Row = std::vector<std::string>;

inline std::string quote(std::string_view field) {
    bool needs = field.find_first_of(",\"\r\n") != std::string_view::npos;
    if (!needs) return std::string(field);
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

inline void write_row(std::ostream& os, const Row& row) {
    for (std::size_t i = 0; i < row.size(); ++i) {
        if (i) os << ',';
        os << quote(row[i]);
    }
    os << '\n';
}

/// Shortest round-trippable decimal form; integers print without a fraction.
inline std::string format_number(double v) {
    if (v != v) return "";
    char buf[40];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

/// RFC-4180 reader; quoted fields may contain separators, quotes and newlines.
inline std::vector<Row> parse(std::string_view text) {
    std::vector<Row> rows;
    Row row;
    std::string field;
    bool in_quotes = false;
    bool row_has_data = false;
    for (std::size_t i = 0; i < text.size(); ++i) {
        char c = text[i];
        if (in_quotes) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field += '"';
                    ++i;
                } else {
                    in_quotes = false;
                }
            } else {
                field += c;
            }
            continue;
        }
        switch (c) {
            case '"':
                in_quotes = true;
                row_has_data = true;
                break;
            case ',':
                row.push_back(std::move(field));
                field.clear();
                row_has_data = true;
                break;
            case '\r':
                break;
            case '\n':
                if (row_has_data || !field.empty()) {
                    row.push_back(std::move(field));
                    rows.push_back(std::move(row));
                }
                row.clear();
                field.clear();
                row_has_data = false;
                break;
            default:
                field += c;
                row_has_data = true;
        }
    }
    if (in_quotes) throw Error(ErrorKind::malformed_input, "unterminated quoted CSV field");
    if (row_has_data || !field.empty()) {
        row.push_back(std::move(field));
        rows.push_back(std::move(row));
    }
    return rows;
}

/// Header-addressed view over parsed rows.
class Table {
public:
    explicit Table(std::string_view text, std::string_view what = "csv") : what_(what) {
        auto rows = parse(text);
        if (rows.empty()) throw Error(ErrorKind::malformed_input, what_ + ": missing header");
        header_ = std::move(rows.front());
        for (std::size_t i = 0; i < header_.size(); ++i) index_[header_[i]] = i;
        rows_.assign(std::make_move_iterator(rows.begin() + 1), std::make_move_iterator(rows.end()));
        for (std::size_t r = 0; r < rows_.size(); ++r) {
            if (rows_[r].size() != header_.size())
                throw Error(ErrorKind::malformed_input,
                            what_ + ": row " + std::to_string(r + 2) + " has " +
                                std::to_string(rows_[r].size()) + " fields, expected " +
                                std::to_string(header_.size()));
        }
    }

    const Row& header() const { return header_; }
    std::size_t size() const { return rows_.size(); }
    bool has(const std::string& column) const { return index_.count(column) != 0; }

    void require(std::initializer_list<std::string_view> columns) const {
        for (auto c : columns)
            if (!has(std::string(c)))
                throw Error(ErrorKind::malformed_input, what_ + ": missing column '" + std::string(c) + "'");
    }

    const std::string& at(std::size_t row, const std::string& column) const {
        auto it = index_.find(column);
        if (it == index_.end())
            throw Error(ErrorKind::malformed_input, what_ + ": missing column '" + column + "'");
        return rows_.at(row)[it->second];
    }

    double number(std::size_t row, const std::string& column) const {
        const auto& s = at(row, column);
        if (s.empty()) return std::numeric_limits<double>::quiet_NaN();
        char* end = nullptr;
        double v = std::strtod(s.c_str(), &end);
        if (end != s.c_str() + s.size())
            throw Error(ErrorKind::malformed_input, what_ + ": '" + s + "' is not a number (" + column + ")");
        return v;
    }

    long long integer(std::size_t row, const std::string& column) const {
        const auto& s = at(row, column);
        char* end = nullptr;
        long long v = std::strtoll(s.c_str(), &end, 10);
        if (s.empty() || end != s.c_str() + s.size())
            throw Error(ErrorKind::malformed_input, what_ + ": '" + s + "' is not an integer (" + column + ")");
        return v;
    }

private:
    std::string what_;
    Row header_;
    std::map<std::string, std::size_t> index_;
    std::vector<Row> rows_;
};

}  // namespace teamprod::csv
