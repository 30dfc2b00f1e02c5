#pragma once

// Results table (CSV, 17 significant digits) and run manifest (JSON).

#include "adiabatic/errors.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>
#include <variant>
#include <vector>

namespace adiabatic {

inline constexpr const char* library_version = "0.1.0";

/// A CSV cell: empty, text, integer or double.
using Cell = std::variant<std::monostate, std::string, long long, double>;

inline std::string format_double(double v) {
    if (!std::isfinite(v)) throw NumericalError("refusing to write a non-finite value to results.csv");
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline std::string csv_escape(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

/// Column-declared table; every row must supply exactly the declared cells.
class ResultsTable {
public:
    explicit ResultsTable(std::vector<std::string> columns) : columns_(std::move(columns)) {}

    const std::vector<std::string>& columns() const { return columns_; }
    std::size_t rows() const { return rows_.size(); }

    void add(std::vector<Cell> row) {
        if (row.size() != columns_.size())
            throw std::logic_error("results row has " + std::to_string(row.size()) + " cells, expected " +
                                   std::to_string(columns_.size()));
        for (const auto& c : row)
            if (const double* d = std::get_if<double>(&c); d && !std::isfinite(*d))
                throw NumericalError("non-finite value in results");
        rows_.push_back(std::move(row));
    }

    std::string to_csv() const {
        std::string out;
        for (std::size_t i = 0; i < columns_.size(); ++i) out += (i ? "," : "") + csv_escape(columns_[i]);
        out += '\n';
        for (const auto& row : rows_) {
            for (std::size_t i = 0; i < row.size(); ++i) {
                if (i) out += ',';
                const Cell& c = row[i];
                if (const auto* s = std::get_if<std::string>(&c)) out += csv_escape(*s);
                else if (const auto* n = std::get_if<long long>(&c)) out += std::to_string(*n);
                else if (const auto* d = std::get_if<double>(&c)) out += format_double(*d);
            }
            out += '\n';
        }
        return out;
    }

    void write(const std::string& path) const {
        std::ofstream f(path, std::ios::binary);
        if (!f) throw std::runtime_error("cannot write " + path);
        f << to_csv();
    }

private:
    std::vector<std::string> columns_;
    std::vector<std::vector<Cell>> rows_;
};

/// Minimal CSV reader for round-trip checks (header + rows of raw strings).
struct CsvData {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
};

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') cur += '"', ++i;
            else if (c == '"') quoted = false;
            else cur += c;
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

inline CsvData read_csv(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot read " + path);
    CsvData d;
    std::string line;
    if (std::getline(f, line)) d.header = split_csv_line(line);
    while (std::getline(f, line))
        if (!line.empty()) d.rows.push_back(split_csv_line(line));
    return d;
}

inline void write_json(const std::string& path, const nlohmann::json& j) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + path);
    f << j.dump(2) << '\n';
}

}  // namespace adiabatic
