#pragma once

#include <cstddef>
#include <filesystem>
#include <initializer_list>
#include <iosfwd>
#include <string>
#include <vector>

#include "spikegam/preprocess.hpp"

namespace spikegam::cli {

// Numeric table read from a CSV file with a header row.
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<double>> columns;

    std::size_t rows() const { return columns.empty() ? 0 : columns.front().size(); }
    // Throws InvalidInput for an unknown column name.
    std::size_t column_index(const std::string& name) const;
};

// Splits one CSV record. Double quotes protect commas, and "" inside a
// quoted field stands for a literal quote.
std::vector<std::string> split_csv_line(const std::string& line);

// Throws InvalidInput for ragged rows, duplicate or empty header names and
// fields that are not finite numbers.
CsvTable read_csv(std::istream& in, const std::string& source = "<input>");
CsvTable read_csv_file(const std::filesystem::path& path);

// The response column becomes y, names in linear_only become linear-only
// candidates and every other column a continuous candidate, all in file
// order. Unknown names throw InvalidInput.
RawDataset to_raw_dataset(const CsvTable& table, const std::string& response,
                          const std::vector<std::string>& linear_only);

// Shortest representation that reads back to the same double; NA for NaN.
std::string format_double(double v);
std::string csv_field(const std::string& s);
void write_csv_row(std::ostream& out, std::initializer_list<std::string> fields);
void write_csv_row(std::ostream& out, const std::vector<std::string>& fields);

}  // namespace spikegam::cli
