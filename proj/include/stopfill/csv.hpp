#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <unordered_map>
#include <vector>

namespace stopfill {

// Splits one CSV line. Handles quoted fields, doubled-quote escapes and
// trailing \r; does not handle embedded newlines (GTFS feeds do not use them).
std::vector<std::string> split_csv_line(const std::string& line);

std::string csv_escape(const std::string& field);

// Header-indexed CSV reader over a text file.
class CsvReader {
public:
    explicit CsvReader(const std::filesystem::path& path);

    bool ok() const { return ok_; }
    const std::vector<std::string>& header() const { return header_; }

    // Column index or -1.
    int col(const std::string& name) const;
    bool has(const std::string& name) const { return col(name) >= 0; }

    // Reads the next record into row(); false at EOF. Blank lines are skipped.
    bool next();
    const std::vector<std::string>& row() const { return row_; }

    // Field by column index; empty string when the row is short.
    const std::string& field(int index) const;

private:
    std::ifstream stream_;
    bool ok_ = false;
    std::vector<std::string> header_;
    std::unordered_map<std::string, int> index_;
    std::vector<std::string> row_;
    std::string empty_;
};

class CsvWriter {
public:
    explicit CsvWriter(const std::filesystem::path& path);

    void write_row(const std::vector<std::string>& fields);
    bool ok() const { return bool(stream_); }

private:
    std::ofstream stream_;
};

}  // namespace stopfill
