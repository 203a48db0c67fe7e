#include "gazenet/csv.hpp"
#include "gazenet/error.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace gazenet::csv {

namespace {

std::vector<std::string> split_line(const std::string& line, char delim, int line_no) {
    std::vector<std::string> cells;
    std::string cur;
    bool in_quotes = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        char c = line[i];
        if (in_quotes) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cur.push_back('"');
                    ++i;
                } else {
                    in_quotes = false;
                }
            } else {
                cur.push_back(c);
            }
        } else if (c == '"') {
            in_quotes = true;
        } else if (c == delim) {
            cells.push_back(std::move(cur));
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    if (in_quotes)
        throw ValidationError("line " + std::to_string(line_no) + ": unterminated quote");
    cells.push_back(std::move(cur));
    return cells;
}

bool needs_quoting(const std::string& cell, char delim) {
    for (char c : cell)
        if (c == delim || c == '"' || c == '\n' || c == '\r') return true;
    return false;
}

std::string quote(const std::string& cell, char delim) {
    if (!needs_quoting(cell, delim)) return cell;
    std::string out = "\"";
    for (char c : cell) {
        if (c == '"') out += "\"\"";
        else out.push_back(c);
    }
    out += "\"";
    return out;
}

} // namespace

Table Table::read_string(const std::string& text, const Dialect& d) {
    Table t;
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    bool have_header = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line_no == 1 && line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0)
            line.erase(0, 3); // UTF-8 BOM
        if (line.empty()) continue;
        if (line[0] == '#') continue;
        if (!have_header) {
            t.header_ = split_line(line, d.delimiter, line_no);
            for (std::size_t i = 0; i < t.header_.size(); ++i)
                t.index_.emplace(t.header_[i], i);
            have_header = true;
            continue;
        }
        Row r;
        r.cells = split_line(line, d.delimiter, line_no);
        r.line = line_no;
        if (r.cells.size() != t.header_.size())
            throw ValidationError("line " + std::to_string(line_no) + ": expected " +
                                  std::to_string(t.header_.size()) + " cells, got " +
                                  std::to_string(r.cells.size()));
        t.rows_.push_back(std::move(r));
    }
    if (!have_header) throw SchemaError("empty file: no header row");
    return t;
}

Table Table::read_file(const std::string& path, const Dialect& d) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    try {
        return read_string(ss.str(), d);
    } catch (const SchemaError& e) {
        throw SchemaError(path + ": " + e.what());
    } catch (const ValidationError& e) {
        throw ValidationError(path + ": " + e.what());
    }
}

void Table::require_columns(const std::vector<std::string>& names) const {
    for (const auto& n : names)
        if (!index_.count(n)) throw SchemaError("missing required column: " + n);
}

bool Table::has_column(const std::string& name) const { return index_.count(name) > 0; }

const std::string& Table::cell(const Row& row, const std::string& col) const {
    auto it = index_.find(col);
    if (it == index_.end()) throw SchemaError("missing required column: " + col);
    return row.cells[it->second];
}

std::int64_t Table::cell_int(const Row& row, const std::string& col) const {
    return parse_int(cell(row, col), col, row.line);
}

double Table::cell_double(const Row& row, const std::string& col) const {
    return parse_double(cell(row, col), col, row.line);
}

std::optional<std::int64_t> Table::cell_int_opt(const Row& row, const std::string& col) const {
    if (!has_column(col)) return std::nullopt;
    const std::string& c = cell(row, col);
    if (c.empty() || c == "na") return std::nullopt;
    return parse_int(c, col, row.line);
}

std::optional<double> Table::cell_double_opt(const Row& row, const std::string& col) const {
    if (!has_column(col)) return std::nullopt;
    const std::string& c = cell(row, col);
    if (c.empty() || c == "na") return std::nullopt;
    return parse_double(c, col, row.line);
}

void Writer::comment(const std::string& text) {
    out_ += "# ";
    out_ += text;
    out_ += "\n";
}

void Writer::row(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i) out_.push_back(dialect_.delimiter);
        out_ += quote(cells[i], dialect_.delimiter);
    }
    out_ += "\n";
}

void Writer::write_file(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot write file: " + path);
    out << out_;
}

std::string format_double(double v) {
    // Shortest representation that round-trips exactly.
    char buf[64];
    for (int prec = 15; prec <= 17; ++prec) {
        std::snprintf(buf, sizeof buf, "%.*g", prec, v);
        double back = 0.0;
        auto [p, ec] = std::from_chars(buf, buf + std::char_traits<char>::length(buf), back);
        (void)p;
        if (ec == std::errc() && back == v) break;
    }
    return buf;
}

std::string format_double(double v, int sig) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*g", sig, v);
    return buf;
}

std::string format_int(std::int64_t v) { return std::to_string(v); }

std::int64_t parse_int(const std::string& cell, const std::string& what, int line) {
    std::int64_t v = 0;
    auto [p, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
    if (ec != std::errc() || p != cell.data() + cell.size())
        throw ValidationError("line " + std::to_string(line) + ": column '" + what +
                              "': unparseable integer '" + cell + "'");
    return v;
}

double parse_double(const std::string& cell, const std::string& what, int line) {
    double v = 0.0;
    auto [p, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
    if (ec != std::errc() || p != cell.data() + cell.size())
        throw ValidationError("line " + std::to_string(line) + ": column '" + what +
                              "': unparseable number '" + cell + "'");
    return v;
}

} // namespace gazenet::csv
