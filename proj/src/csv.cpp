#include "hftnet/csv.hpp"

#include <sstream>

#include "hftnet/common.hpp"

namespace hftnet {

int CsvTable::column(std::string_view name) const {
    for (size_t i = 0; i < header.size(); ++i)
        if (header[i] == name) return static_cast<int>(i);
    return -1;
}

void split_fields(std::string_view line, std::vector<std::string>& out) {
    out.clear();
    size_t start = 0;
    while (true) {
        size_t comma = line.find(',', start);
        if (comma == std::string_view::npos) {
            out.emplace_back(line.substr(start));
            break;
        }
        out.emplace_back(line.substr(start, comma - start));
        start = comma + 1;
    }
}

CsvTable read_csv_stream(std::istream& in, const std::string& name) {
    CsvTable table;
    std::string line;
    size_t lineno = 0;
    bool have_header = false;
    std::vector<std::string> fields;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        split_fields(line, fields);
        if (!have_header) {
            table.header = fields;
            have_header = true;
            continue;
        }
        if (fields.size() != table.header.size())
            throw DataError(name + ":" + std::to_string(lineno) + ": expected " +
                            std::to_string(table.header.size()) + " fields, got " +
                            std::to_string(fields.size()));
        table.rows.push_back(fields);
        table.line_numbers.push_back(lineno);
    }
    if (!have_header) throw DataError(name + ": missing header row");
    return table;
}

CsvTable read_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path);
    return read_csv_stream(in, path);
}

CsvWriter::CsvWriter(const std::string& path) : out_(path), path_(path) {
    if (!out_) throw DataError("cannot write " + path);
}

void CsvWriter::comment(const std::string& text) { out_ << "# " << text << "\n"; }

void CsvWriter::row(const std::vector<std::string>& fields) {
    for (size_t i = 0; i < fields.size(); ++i) {
        if (i) out_ << ',';
        out_ << fields[i];
    }
    out_ << '\n';
}

void CsvWriter::close() {
    out_.close();
    if (!out_) throw DataError("write failed: " + path_);
}

}  // namespace hftnet
