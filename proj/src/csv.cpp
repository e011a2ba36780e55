#include "mabmdp/csv.hpp"

#include <charconv>
#include <cmath>
#include <stdexcept>

namespace mabmdp {

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

CsvTable::CsvTable(std::vector<std::string> header) : header_(std::move(header)) {
  if (header_.empty()) throw std::invalid_argument("CsvTable: empty header");
}

CsvTable& CsvTable::text(std::string_view v) {
  if (cells_in_row_ > 0) body_ += ',';
  body_ += v;
  ++cells_in_row_;
  return *this;
}

CsvTable& CsvTable::cell(double v) { return text(format_double(v)); }
CsvTable& CsvTable::cell(std::uint64_t v) { return text(std::to_string(v)); }

void CsvTable::end_row() {
  if (cells_in_row_ != header_.size())
    throw std::logic_error("CsvTable: row has " + std::to_string(cells_in_row_) + " cells, header has " +
                           std::to_string(header_.size()));
  body_ += '\n';
  cells_in_row_ = 0;
  ++rows_;
}

std::string CsvTable::str() const {
  std::string out;
  for (std::size_t i = 0; i < header_.size(); ++i) {
    if (i) out += ',';
    out += header_[i];
  }
  out += '\n';
  return out + body_;
}

}  // namespace mabmdp
