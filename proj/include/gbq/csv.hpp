#pragma once

#include <iosfwd>
#include <string>
#include <variant>
#include <vector>

namespace gbq {

/// Shortest decimal string that parses back to the same binary64 value.
/// NaN is written as "nan", infinities as "inf"/"-inf".
std::string format_double(double v);

using CsvCell = std::variant<double, long long, std::string>;

/// Comma-separated, '.' decimal, header row.
class CsvWriter {
 public:
  explicit CsvWriter(std::ostream& os) : os_(os) {}
  void header(const std::vector<std::string>& cols);
  void row(const std::vector<double>& values);
  void row(const std::vector<CsvCell>& cells);

 private:
  std::ostream& os_;
};

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  int column(const std::string& name) const;  // -1 if absent
};

CsvTable read_csv(std::istream& is);

}  // namespace gbq
