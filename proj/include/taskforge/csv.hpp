#pragma once

#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace taskforge::csv {

using Record = std::vector<std::string>;

// Streaming RFC-4180 reader: quoted fields, doubled quotes, embedded
// separators and line breaks; accepts CRLF or LF record terminators.
class Reader {
 public:
  explicit Reader(std::istream& in, char separator = ',');

  // Next record, or nullopt at end of input. A UTF-8 BOM on the first
  // record is stripped.
  std::optional<Record> next();

  // 1-based physical line where the last returned record started.
  std::size_t line() const { return record_line_; }

 private:
  std::istream& in_;
  char sep_;
  std::size_t line_ = 1;
  std::size_t record_line_ = 0;
  bool first_ = true;
};

// Quotes a field only when it contains the separator, a quote or a line break.
std::string escape(const std::string& field, char separator = ',');

void write_record(std::ostream& out, const Record& record, char separator = ',');

}  // namespace taskforge::csv
