#include "grasp/report.hpp"

#include <charconv>
#include <fstream>

#include <json.hpp>

#include "grasp/error.hpp"

namespace grasp::report {

namespace {

void require_rectangular(const Table& table) {
    if (table.columns.empty()) {
        throw ParameterError("report: table has no columns");
    }
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        if (table.rows[r].size() != table.columns.size()) {
            throw ParameterError("report: row " + std::to_string(r) + " has " +
                                 std::to_string(table.rows[r].size()) + " cells, schema has " +
                                 std::to_string(table.columns.size()));
        }
    }
}

// RFC-4180: quote fields containing comma, quote, CR or LF; double quotes.
std::string csv_escape(const std::string& field) {
    if (field.find_first_of(",\"\r\n") == std::string::npos) {
        return field;
    }
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') {
            out += "\"\"";
        } else {
            out += c;
        }
    }
    out += '"';
    return out;
}

std::string value_to_string(const Value& v) {
    if (std::holds_alternative<std::int64_t>(v)) {
        return std::to_string(std::get<std::int64_t>(v));
    }
    if (std::holds_alternative<double>(v)) {
        return format_double(std::get<double>(v));
    }
    if (std::holds_alternative<bool>(v)) {
        return std::get<bool>(v) ? "true" : "false";
    }
    return std::get<std::string>(v);
}

}  // namespace

Format format_from_string(const std::string& name) {
    if (name == "csv") return Format::csv;
    if (name == "text" || name == "structured-text") return Format::structured_text;
    throw ParameterError("report: unknown format '" + name + "'");
}

std::string format_double(double v) {
    char buf[64];
    const auto result = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, result.ptr);
}

std::string render_csv(const Table& table) {
    require_rectangular(table);
    std::string out;
    for (std::size_t i = 0; i < table.columns.size(); ++i) {
        if (i > 0) out += ',';
        out += csv_escape(table.columns[i]);
    }
    out += '\n';
    for (const auto& row : table.rows) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i > 0) out += ',';
            out += csv_escape(value_to_string(row[i]));
        }
        out += '\n';
    }
    return out;
}

std::string render_structured(const Table& table) {
    require_rectangular(table);
    nlohmann::json doc = nlohmann::json::array();
    for (const auto& row : table.rows) {
        nlohmann::json obj;
        for (std::size_t i = 0; i < row.size(); ++i) {
            const auto& name = table.columns[i];
            const auto& value = row[i];
            if (std::holds_alternative<std::int64_t>(value)) {
                obj[name] = std::get<std::int64_t>(value);
            } else if (std::holds_alternative<double>(value)) {
                obj[name] = std::get<double>(value);
            } else if (std::holds_alternative<bool>(value)) {
                obj[name] = std::get<bool>(value);
            } else {
                obj[name] = std::get<std::string>(value);
            }
        }
        doc.push_back(std::move(obj));
    }
    return doc.dump(2) + "\n";
}

void write_report(const Table& table, const std::filesystem::path& path, Format format) {
    const std::string text =
        format == Format::csv ? render_csv(table) : render_structured(table);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw IoError("cannot open report destination " + path.string());
    }
    out << text;
    if (!out) {
        throw IoError("write failed for report " + path.string());
    }
}

}  // namespace grasp::report
