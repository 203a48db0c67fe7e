#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace gazenet::csv {

struct Dialect {
    char delimiter = ',';
};

// One parsed data row: cells plus the 1-based line number in the source file.
struct Row {
    std::vector<std::string> cells;
    int line = 0;
};

// Header-addressed CSV table. Lines starting with '#' are comments and are
// skipped (our own outputs carry a schema comment line); a UTF-8 BOM is
// stripped. Cells are addressed by column name, so upstream exports with
// extra columns still parse.
class Table {
public:
    static Table read_file(const std::string& path, const Dialect& d = {});
    static Table read_string(const std::string& text, const Dialect& d = {});

    // Throws SchemaError naming the first missing column.
    void require_columns(const std::vector<std::string>& names) const;

    bool has_column(const std::string& name) const;
    std::size_t row_count() const { return rows_.size(); }
    const std::vector<Row>& rows() const { return rows_; }
    const std::vector<std::string>& header() const { return header_; }

    // Cell accessors; throw ValidationError citing the line number on
    // unparseable cells. The optional variants treat "" as absent.
    const std::string& cell(const Row& row, const std::string& col) const;
    std::int64_t cell_int(const Row& row, const std::string& col) const;
    double cell_double(const Row& row, const std::string& col) const;
    std::optional<std::int64_t> cell_int_opt(const Row& row, const std::string& col) const;
    std::optional<double> cell_double_opt(const Row& row, const std::string& col) const;

private:
    std::vector<std::string> header_;
    std::unordered_map<std::string, std::size_t> index_;
    std::vector<Row> rows_;
};

// Writer producing RFC4180-style quoting. Every file starts with a schema
// comment line ("# gazenet <schema> v1 seed=<seed>") when `comment` is set.
class Writer {
public:
    explicit Writer(const Dialect& d = {}) : dialect_(d) {}
    void comment(const std::string& text); // emitted as "# text"
    void row(const std::vector<std::string>& cells);
    const std::string& str() const { return out_; }
    void write_file(const std::string& path) const;

private:
    Dialect dialect_;
    std::string out_;
};

// Locale-independent numeric formatting ("." decimal separator, full
// round-trip precision for handoff files).
std::string format_double(double v);          // shortest exact (%.17g trimmed)
std::string format_double(double v, int sig); // %.{sig}g
std::string format_int(std::int64_t v);

// Strict locale-independent parses of a whole cell.
std::int64_t parse_int(const std::string& cell, const std::string& what, int line);
double parse_double(const std::string& cell, const std::string& what, int line);

} // namespace gazenet::csv
