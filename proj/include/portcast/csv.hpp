#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace portcast {

// Minimal RFC-4180 style CSV. Fields may be quoted; quoted fields may contain
// commas, doubled quotes and newlines. Both \n and \r\n records are accepted.
class CsvReader {
 public:
  explicit CsvReader(std::istream& in) : in_(in) {}

  // Reads the next record into `fields`. Returns false at end of input.
  bool next(std::vector<std::string>& fields);

  // 1-based line number at which the last record started.
  std::size_t record_line() const { return record_line_; }

 private:
  std::istream& in_;
  std::size_t line_ = 1;
  std::size_t record_line_ = 1;
};

std::string csv_escape(std::string_view field);
std::string csv_join(const std::vector<std::string>& fields);

// Round-trip exact formatting for doubles (shortest representation).
std::string format_double(double v);

}  // namespace portcast
