#pragma once

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace stochlab {

struct CsvParseError : std::runtime_error {
    CsvParseError(std::size_t line_, const std::string& what_)
        : std::runtime_error("csv parse error at line " + std::to_string(line_) + ": " + what_),
          line(line_) {}
    std::size_t line;
};

/// Numeric table with a header row. The write/parse pair round-trips doubles
/// exactly (17 significant digits).
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;

    std::size_t column(const std::string& name) const {
        for (std::size_t i = 0; i < header.size(); ++i)
            if (header[i] == name) return i;
        throw std::invalid_argument("csv: no column named '" + name + "'");
    }

    bool has_column(const std::string& name) const {
        for (const auto& h : header)
            if (h == name) return true;
        return false;
    }
};

inline std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline std::string csv_to_string(const CsvTable& table) {
    std::string out;
    for (std::size_t i = 0; i < table.header.size(); ++i) {
        if (i) out += ',';
        out += table.header[i];
    }
    out += '\n';
    for (const auto& row : table.rows) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i) out += ',';
            out += format_double(row[i]);
        }
        out += '\n';
    }
    return out;
}

inline void write_csv(const std::string& path, const CsvTable& table) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("csv: cannot open '" + path + "' for writing");
    f << csv_to_string(table);
    if (!f) throw std::runtime_error("csv: write to '" + path + "' failed");
}

inline CsvTable parse_csv(const std::string& text) {
    CsvTable table;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    auto next_line = [&](std::string& line) {
        if (pos >= text.size()) return false;
        const std::size_t nl = text.find('\n', pos);
        if (nl == std::string::npos) {
            line = text.substr(pos);
            pos = text.size();
        } else {
            line = text.substr(pos, nl - pos);
            pos = nl + 1;
        }
        if (!line.empty() && line.back() == '\r') line.pop_back();
        ++line_no;
        return true;
    };

    std::string line;
    if (!next_line(line) || line.empty()) throw CsvParseError(1, "missing header row");
    std::stringstream hs(line);
    std::string cell;
    while (std::getline(hs, cell, ',')) table.header.push_back(cell);

    while (next_line(line)) {
        if (line.empty()) {
            if (pos >= text.size()) break;  // trailing newline
            throw CsvParseError(line_no, "empty row");
        }
        std::vector<double> row;
        row.reserve(table.header.size());
        std::size_t start = 0;
        while (true) {
            const std::size_t comma = line.find(',', start);
            const std::string_view field(line.data() + start,
                                         (comma == std::string::npos ? line.size() : comma) - start);
            double v = 0.0;
            const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
            if (ec != std::errc{} || ptr != field.data() + field.size())
                throw CsvParseError(line_no, "bad number '" + std::string(field) + "'");
            row.push_back(v);
            if (comma == std::string::npos) break;
            start = comma + 1;
        }
        if (row.size() != table.header.size())
            throw CsvParseError(line_no, "expected " + std::to_string(table.header.size()) +
                                             " fields, got " + std::to_string(row.size()));
        table.rows.push_back(std::move(row));
    }
    return table;
}

inline CsvTable read_csv(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("csv: cannot open '" + path + "'");
    std::stringstream buf;
    buf << f.rdbuf();
    return parse_csv(buf.str());
}

}  // namespace stochlab
