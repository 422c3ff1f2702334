#include "stopfill/csv.hpp"

namespace stopfill {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    bool quoted = false;
    for (size_t i = 0; i < line.size(); ++i) {
        char c = line[i];
        if (c == '"') {
            if (quoted && i + 1 < line.size() && line[i + 1] == '"') {
                cell += '"';
                ++i;
            } else {
                quoted = !quoted;
            }
        } else if (c == ',' && !quoted) {
            out.push_back(std::move(cell));
            cell.clear();
        } else if (c == '\r') {
            continue;
        } else {
            cell += c;
        }
    }
    out.push_back(std::move(cell));
    return out;
}

std::string csv_escape(const std::string& field) {
    if (field.find_first_of(",\"\n") == std::string::npos) return field;
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

namespace {
void strip_bom(std::string& s) {
    if (s.size() >= 3 && (unsigned char)s[0] == 0xEF && (unsigned char)s[1] == 0xBB &&
        (unsigned char)s[2] == 0xBF) {
        s.erase(0, 3);
    }
}
}  // namespace

CsvReader::CsvReader(const std::filesystem::path& path) : stream_(path) {
    if (!stream_) return;
    std::string line;
    if (!std::getline(stream_, line)) return;
    strip_bom(line);
    header_ = split_csv_line(line);
    for (size_t i = 0; i < header_.size(); ++i) index_[header_[i]] = int(i);
    ok_ = true;
}

int CsvReader::col(const std::string& name) const {
    auto it = index_.find(name);
    return it == index_.end() ? -1 : it->second;
}

bool CsvReader::next() {
    std::string line;
    while (std::getline(stream_, line)) {
        if (line.empty() || line == "\r") continue;
        row_ = split_csv_line(line);
        return true;
    }
    return false;
}

const std::string& CsvReader::field(int index) const {
    if (index < 0 || size_t(index) >= row_.size()) return empty_;
    return row_[size_t(index)];
}

CsvWriter::CsvWriter(const std::filesystem::path& path) : stream_(path) {}

void CsvWriter::write_row(const std::vector<std::string>& fields) {
    for (size_t i = 0; i < fields.size(); ++i) {
        if (i) stream_ << ',';
        stream_ << csv_escape(fields[i]);
    }
    stream_ << '\n';
}

}  // namespace stopfill
