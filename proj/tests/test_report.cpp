#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <charconv>
#include <filesystem>
#include <fstream>

#include "grasp/error.hpp"
#include "grasp/report.hpp"

using namespace grasp;
using namespace grasp::report;

namespace {

namespace fs = std::filesystem;

// Minimal RFC-4180 reader used as the parse-back oracle.
std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> row;
    std::string field;
    bool quoted = false;
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
                field += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            row.push_back(std::move(field));
            field.clear();
        } else if (c == '\n') {
            row.push_back(std::move(field));
            field.clear();
            rows.push_back(std::move(row));
            row.clear();
        } else {
            field += c;
        }
    }
    return rows;
}

}  // namespace

TEST_CASE("empty table renders a header-only CSV") {
    Table t({"alpha", "beta", "gamma"});
    CHECK(render_csv(t) == "alpha,beta,gamma\n");
}

TEST_CASE("single record renders a two-line CSV") {
    Table t({"n", "alignment", "surprise_valid"});
    t.start_row();
    t.cell(1000);
    t.cell(0.995);
    t.cell(true);
    CHECK(render_csv(t) == "n,alignment,surprise_valid\n1000,0.995,true\n");
}

TEST_CASE("RFC-4180 quoting") {
    Table t({"name", "note"});
    t.start_row();
    t.cell("plain");
    t.cell("comma, inside");
    t.start_row();
    t.cell("with \"quotes\"");
    t.cell("line\nbreak");
    const auto text = render_csv(t);
    CHECK(text ==
          "name,note\nplain,\"comma, inside\"\n\"with \"\"quotes\"\"\",\"line\nbreak\"\n");

    const auto parsed = parse_csv(text);
    REQUIRE(parsed.size() == 3);
    CHECK(parsed[1][1] == "comma, inside");
    CHECK(parsed[2][0] == "with \"quotes\"");
    CHECK(parsed[2][1] == "line\nbreak");
}

TEST_CASE("csv round-trip reproduces records exactly") {
    Table t({"seed", "value", "flag", "name"});
    const std::vector<double> doubles = {0.1, 1.0 / 3.0, -2.5e-17, 123456789.125, 0.0};
    for (std::size_t i = 0; i < doubles.size(); ++i) {
        t.start_row();
        t.cell(static_cast<std::int64_t>(i));
        t.cell(doubles[i]);
        t.cell(i % 2 == 0);
        t.cell("row-" + std::to_string(i));
    }
    const auto text = render_csv(t);
    const auto parsed = parse_csv(text);
    REQUIRE(parsed.size() == doubles.size() + 1);
    for (std::size_t i = 0; i < doubles.size(); ++i) {
        const auto& row = parsed[i + 1];
        CHECK(row[0] == std::to_string(i));
        double back = 0.0;
        const auto& cell = row[1];
        std::from_chars(cell.data(), cell.data() + cell.size(), back);
        CHECK(back == doubles[i]);  // shortest form round-trips bit-exactly
        CHECK(row[2] == (i % 2 == 0 ? "true" : "false"));
        CHECK(row[3] == "row-" + std::to_string(i));
    }
}

TEST_CASE("structured text output is a stable single document") {
    Table t({"zeta", "alpha"});
    t.start_row();
    t.cell(1.5);
    t.cell("x");
    const auto a = render_structured(t);
    const auto b = render_structured(t);
    CHECK(a == b);
    // Keys are sorted, independent of the declared column order.
    CHECK(a.find("\"alpha\"") < a.find("\"zeta\""));
    CHECK(a.front() == '[');
    CHECK(a.back() == '\n');

    Table empty({"only"});
    CHECK(render_structured(empty) == "[]\n");
}

TEST_CASE("ragged rows are rejected") {
    Table t({"a", "b"});
    t.start_row();
    t.cell(1);
    CHECK_THROWS_AS(render_csv(t), ParameterError);
    CHECK_THROWS_AS(render_structured(t), ParameterError);
}

TEST_CASE("write_report surfaces i/o failures with path context") {
    Table t({"a"});
    t.start_row();
    t.cell(1);
    const fs::path bad = "/nonexistent-dir-grasp/report.csv";
    try {
        write_report(t, bad, Format::csv);
        FAIL("expected IoError");
    } catch (const IoError& e) {
        CHECK(std::string(e.what()).find("nonexistent-dir-grasp") != std::string::npos);
    }
}

TEST_CASE("write_report writes both formats to disk") {
    const fs::path dir = fs::temp_directory_path() / "grasp-report-test";
    fs::remove_all(dir);
    fs::create_directories(dir);
    Table t({"x"});
    t.start_row();
    t.cell(2.0);
    write_report(t, dir / "r.csv", Format::csv);
    write_report(t, dir / "r.json", Format::structured_text);
    std::ifstream csv(dir / "r.csv");
    std::string line;
    std::getline(csv, line);
    CHECK(line == "x");
    std::getline(csv, line);
    CHECK(line == "2");
    std::ifstream json_in(dir / "r.json");
    std::string all((std::istreambuf_iterator<char>(json_in)),
                    std::istreambuf_iterator<char>());
    CHECK(all.find("\"x\": 2.0") != std::string::npos);
}

TEST_CASE("format helpers") {
    CHECK(format_from_string("csv") == Format::csv);
    CHECK(format_from_string("text") == Format::structured_text);
    CHECK_THROWS_AS(format_from_string("yaml"), ParameterError);
    CHECK(format_double(0.1) == "0.1");
    CHECK(format_double(2.0) == "2");
}
