#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace mabmdp {

// Shortest decimal form that parses back to the same double; "nan", "inf"
// and "-inf" for non-finite values.
std::string format_double(double v);

// Plain comma-separated table with a fixed header. Fields are never quoted,
// so callers must not pass commas or newlines.
class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header);

  CsvTable& cell(double v);
  CsvTable& cell(std::uint64_t v);
  CsvTable& cell(int v) { return text(std::to_string(v)); }
  CsvTable& cell(bool v) { return text(v ? "true" : "false"); }
  CsvTable& text(std::string_view v);
  // Ends the current row; throws if it has the wrong number of cells.
  void end_row();

  std::size_t rows() const { return rows_; }
  std::string str() const;

 private:
  std::vector<std::string> header_;
  std::string body_;
  std::size_t rows_ = 0;
  std::size_t cells_in_row_ = 0;
};

}  // namespace mabmdp
