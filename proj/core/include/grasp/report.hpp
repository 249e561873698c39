#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <variant>
#include <vector>

namespace grasp::report {

using Value = std::variant<std::int64_t, double, std::string, bool>;

// A rectangular report: declared columns plus typed rows. The schema lives
// on the table, so an empty table still renders a CSV header.
struct Table {
    explicit Table(std::vector<std::string> column_names)
        : columns(std::move(column_names)) {}

    std::vector<std::string> columns;
    std::vector<std::vector<Value>> rows;

    void start_row() { rows.emplace_back(); }
    void cell(std::int64_t v) { rows.back().emplace_back(v); }
    void cell(int v) { cell(static_cast<std::int64_t>(v)); }
    void cell(std::uint64_t v) { cell(static_cast<std::int64_t>(v)); }
    void cell(double v) { rows.back().emplace_back(v); }
    void cell(std::string v) { rows.back().emplace_back(std::move(v)); }
    void cell(const char* v) { cell(std::string(v)); }
    void cell(bool v) { rows.back().emplace_back(v); }
};

enum class Format { csv, structured_text };

Format format_from_string(const std::string& name);

// CSV with RFC-4180 quoting, columns in declared order. Doubles print in
// shortest round-trip form, so output is deterministic and parse-back exact.
std::string render_csv(const Table& table);

// Single structured-text (JSON) document, one object per row, stable key
// order.
std::string render_structured(const Table& table);

void write_report(const Table& table, const std::filesystem::path& path, Format format);

// Shortest round-trip decimal form of a double ("2" stays "2", 0.1 -> "0.1").
std::string format_double(double v);

}  // namespace grasp::report
