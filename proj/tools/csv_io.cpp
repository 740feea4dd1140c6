#include "csv_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>

#include "spikegam/errors.hpp"

namespace spikegam::cli {

namespace {

std::string trim(const std::string& s) {
    const auto first = s.find_first_not_of(" \t");
    if (first == std::string::npos) return {};
    const auto last = s.find_last_not_of(" \t");
    return s.substr(first, last - first + 1);
}

double parse_number(const std::string& field, const std::string& where) {
    const std::string s = trim(field);
    if (s.empty()) throw InvalidInput(where + ": missing value");
    const char* begin = s.data();
    const char* end = s.data() + s.size();
    if (*begin == '+') ++begin;
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(begin, end, v);
    if (ec != std::errc() || ptr != end || !std::isfinite(v))
        throw InvalidInput(where + ": '" + s + "' is not a finite number");
    return v;
}

}  // namespace

std::size_t CsvTable::column_index(const std::string& name) const {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw InvalidInput("unknown column '" + name + "'");
    return static_cast<std::size_t>(it - header.begin());
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char ch = line[i];
        if (quoted) {
            if (ch == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cur += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cur += ch;
            }
        } else if (ch == '"') {
            quoted = true;
        } else if (ch == ',') {
            fields.push_back(std::move(cur));
            cur.clear();
        } else {
            cur += ch;
        }
    }
    if (quoted) throw InvalidInput("unterminated quoted field");
    fields.push_back(std::move(cur));
    return fields;
}

CsvTable read_csv(std::istream& in, const std::string& source) {
    CsvTable table;
    std::string line;
    std::size_t line_no = 0;
    auto next_line = [&]() -> bool {
        while (std::getline(in, line)) {
            ++line_no;
            if (!line.empty() && line.back() == '\r') line.pop_back();
            if (!trim(line).empty()) return true;
        }
        return false;
    };
    if (!next_line()) throw InvalidInput(source + ": empty file");
    for (auto& name : split_csv_line(line)) table.header.push_back(trim(name));
    std::set<std::string> seen;
    for (const auto& name : table.header) {
        if (name.empty()) throw InvalidInput(source + ": empty column name in header");
        if (!seen.insert(name).second) throw InvalidInput(source + ": duplicate column '" + name + "'");
    }
    table.columns.assign(table.header.size(), {});
    while (next_line()) {
        const auto fields = split_csv_line(line);
        const std::string where = source + ":" + std::to_string(line_no);
        if (fields.size() != table.header.size())
            throw InvalidInput(where + ": expected " + std::to_string(table.header.size()) + " fields, found " +
                               std::to_string(fields.size()));
        for (std::size_t j = 0; j < fields.size(); ++j)
            table.columns[j].push_back(parse_number(fields[j], where + " column '" + table.header[j] + "'"));
    }
    if (table.rows() == 0) throw InvalidInput(source + ": no data rows");
    return table;
}

CsvTable read_csv_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InvalidInput("cannot open '" + path.string() + "'");
    return read_csv(in, path.string());
}

RawDataset to_raw_dataset(const CsvTable& table, const std::string& response,
                          const std::vector<std::string>& linear_only) {
    const std::size_t y_col = table.column_index(response);
    std::set<std::size_t> lin;
    for (const auto& name : linear_only) {
        const std::size_t j = table.column_index(name);
        if (j == y_col) throw InvalidInput("response '" + name + "' cannot also be a predictor");
        lin.insert(j);
    }
    RawDataset raw;
    raw.y = table.columns[y_col];
    for (std::size_t j = 0; j < table.header.size(); ++j) {
        if (j == y_col) continue;
        if (lin.count(j)) {
            raw.x_linear.push_back(table.columns[j]);
            raw.linear_names.push_back(table.header[j]);
        } else {
            raw.x_nonlinear.push_back(table.columns[j]);
            raw.nonlinear_names.push_back(table.header[j]);
        }
    }
    if (raw.x_linear.empty() && raw.x_nonlinear.empty()) throw InvalidInput("no predictor columns");
    return raw;
}

std::string format_double(double v) {
    if (std::isnan(v)) return "NA";
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, ptr);
}

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
    std::string out = "\"";
    for (char ch : s) {
        if (ch == '"') out += '"';
        out += ch;
    }
    return out + '"';
}

void write_csv_row(std::ostream& out, const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i) out << ',';
        out << fields[i];
    }
    out << '\n';
}

void write_csv_row(std::ostream& out, std::initializer_list<std::string> fields) {
    write_csv_row(out, std::vector<std::string>(fields));
}

}  // namespace spikegam::cli
