#include "singlab/cli/table.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <limits>

#include "singlab/types.hpp"

namespace singlab::cli {

void Table::add_row(std::vector<std::string> row) {
    if (row.size() != columns.size()) throw DomainError("Table " + name + ": row width does not match header");
    rows.push_back(std::move(row));
}

std::size_t Table::column(const std::string& col) const {
    for (std::size_t i = 0; i < columns.size(); ++i)
        if (columns[i] == col) return i;
    throw DomainError("table " + name + ": missing column '" + col + "'");
}

std::vector<double> Table::numeric(const std::string& col) const {
    const std::size_t c = column(col);
    std::vector<double> out;
    out.reserve(rows.size());
    for (const auto& row : rows) {
        const std::string& s = row[c];
        double v = std::numeric_limits<double>::quiet_NaN();
        if (s == "inf") v = std::numeric_limits<double>::infinity();
        else if (s == "-inf") v = -std::numeric_limits<double>::infinity();
        else {
            double parsed = 0.0;
            const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), parsed);
            if (ec == std::errc() && ptr == s.data() + s.size()) v = parsed;
        }
        out.push_back(v);
    }
    return out;
}

std::string fmt(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string fmt(std::uint64_t v) { return std::to_string(v); }

namespace {

std::string quote(const std::string& s) {
    if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

void append_record(std::string& out, const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i) out += ',';
        out += quote(cells[i]);
    }
    out += "\r\n";
}

}  // namespace

std::string to_csv(const Table& t) {
    std::string out;
    append_record(out, t.columns);
    for (const auto& row : t.rows) append_record(out, row);
    return out;
}

Table from_csv(const std::string& text, const std::string& name) {
    std::vector<std::vector<std::string>> records;
    std::vector<std::string> rec;
    std::string cell;
    bool quoted = false, cell_started = false;
    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    cell += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cell += c;
            }
            continue;
        }
        if (c == '"') {
            if (cell_started) throw DomainError("csv: quote inside an unquoted field");
            quoted = true;
            cell_started = true;
        } else if (c == ',') {
            rec.push_back(std::move(cell));
            cell.clear();
            cell_started = false;
        } else if (c == '\r' || c == '\n') {
            if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') ++i;
            rec.push_back(std::move(cell));
            cell.clear();
            cell_started = false;
            records.push_back(std::move(rec));
            rec.clear();
        } else {
            cell += c;
            cell_started = true;
        }
    }
    if (quoted) throw DomainError("csv: unterminated quoted field");
    if (cell_started || !rec.empty()) {
        rec.push_back(std::move(cell));
        records.push_back(std::move(rec));
    }
    Table t;
    t.name = name;
    if (records.empty()) return t;
    t.columns = records.front();
    for (std::size_t r = 1; r < records.size(); ++r) {
        if (records[r].size() != t.columns.size())
            throw DomainError("csv: row " + std::to_string(r) + " has " + std::to_string(records[r].size()) +
                              " fields, header has " + std::to_string(t.columns.size()));
        t.rows.push_back(std::move(records[r]));
    }
    return t;
}

}  // namespace singlab::cli
