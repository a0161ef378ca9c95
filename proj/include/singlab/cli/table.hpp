#pragma once

// Data tables and their CSV form: RFC 4180, header row, '.' decimal point,
// doubles with 17 significant digits.

#include <cstdint>
#include <string>
#include <vector>

namespace singlab::cli {

struct Table {
    std::string name;
    std::vector<std::string> columns;
    std::vector<std::vector<std::string>> rows;

    void add_row(std::vector<std::string> row);
    // Index of a column; throws DomainError when missing.
    std::size_t column(const std::string& name) const;
    // Column values as doubles; cells that do not parse become NaN.
    std::vector<double> numeric(const std::string& name) const;
};

std::string fmt(double v);
std::string fmt(std::uint64_t v);
inline std::string fmt(int v) { return std::to_string(v); }
inline std::string fmt(bool v) { return v ? "true" : "false"; }

std::string to_csv(const Table& t);
// Throws DomainError on malformed quoting or ragged rows.
Table from_csv(const std::string& text, const std::string& name = "");

}  // namespace singlab::cli
