#pragma once

#include <istream>
#include <ostream>
#include <string>
#include <vector>

namespace uplift {

// A parsed CSV file: header plus string cells. Lines starting with '#'
// and blank lines are skipped. No quoting; fields may not contain commas.
struct RawTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  // Column position by name, or -1.
  int column(const std::string& name) const;
};

RawTable read_csv(std::istream& in);
RawTable read_csv_file(const std::string& path);

std::vector<std::string> split_fields(const std::string& line, char sep = ',');

// Shortest decimal text that parses back to the same double.
std::string format_double(double value);
double parse_double(const std::string& text);

}  // namespace uplift
