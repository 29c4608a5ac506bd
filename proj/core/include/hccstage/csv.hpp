#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace hccstage::csv {

using Row = std::vector<std::string>;

// RFC-4180-ish reader: comma separated, optional double quotes, CRLF or LF.
// A ragged row raises ErrorKind::Parse naming the 1-based data row index.
struct Document {
    Row header;
    std::vector<Row> rows;
};

Document parse(std::string_view text, std::string_view source_name = "<memory>");
Document read_file(const std::filesystem::path& path);

std::string escape(std::string_view field);
void write_row(std::ostream& out, const Row& row);

// Shortest round-trip decimal form; identical bytes for identical doubles.
std::string format_double(double value);

// Strict full-string parse; leading/trailing blanks allowed.
bool parse_double(std::string_view text, double& out);

}  // namespace hccstage::csv
