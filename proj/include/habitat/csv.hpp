#pragma once

#include <string>
#include <vector>

// Minimal RFC 4180 CSV support: quoted fields with "" escapes, no embedded
// newlines. Enough for the scheme/rule/split assets this pipeline ships.

namespace habitat::csv {

using Row = std::vector<std::string>;

std::string escape(const std::string& field);
Row parse_line(const std::string& line);

/// Reads all rows; header handling is the caller's business.
std::vector<Row> read_file(const std::string& path);

void write_file(const std::string& path, const std::vector<Row>& rows);

} // namespace habitat::csv
