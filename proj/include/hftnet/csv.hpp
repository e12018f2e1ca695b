#pragma once

#include <fstream>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

namespace hftnet {

// Minimal CSV layer for the pipeline's file formats: comma-separated, header
// row required, no quoting, lines starting with '#' skipped (used for the
// manifest stamp).
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
    std::vector<size_t> line_numbers;  // 1-based source line of each row

    // index of a header column, -1 if absent
    int column(std::string_view name) const;
};

CsvTable read_csv(const std::string& path);
CsvTable read_csv_stream(std::istream& in, const std::string& name);

void split_fields(std::string_view line, std::vector<std::string>& out);

class CsvWriter {
public:
    explicit CsvWriter(const std::string& path);
    void comment(const std::string& text);  // writes "# text"
    void row(const std::vector<std::string>& fields);
    void close();

private:
    std::ofstream out_;
    std::string path_;
};

}  // namespace hftnet
