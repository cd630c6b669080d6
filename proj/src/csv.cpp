#include "taskforge/csv.hpp"

namespace taskforge::csv {

Reader::Reader(std::istream& in, char separator) : in_(in), sep_(separator) {}

std::optional<Record> Reader::next() {
  Record record;
  std::string field;
  bool in_quotes = false;
  bool any = false;
  record_line_ = line_;
  int c = 0;
  while ((c = in_.get()) != std::char_traits<char>::eof()) {
    any = true;
    const char ch = static_cast<char>(c);
    if (in_quotes) {
      if (ch == '"') {
        if (in_.peek() == '"') {
          in_.get();
          field.push_back('"');
        } else {
          in_quotes = false;
        }
      } else {
        if (ch == '\n') ++line_;
        field.push_back(ch);
      }
      continue;
    }
    if (ch == '"') {
      in_quotes = true;
    } else if (ch == sep_) {
      record.push_back(std::move(field));
      field.clear();
    } else if (ch == '\r') {
      if (in_.peek() == '\n') continue;
      ++line_;
      break;
    } else if (ch == '\n') {
      ++line_;
      break;
    } else {
      field.push_back(ch);
    }
  }
  if (!any) return std::nullopt;
  record.push_back(std::move(field));
  if (first_) {
    first_ = false;
    if (record.front().rfind("\xEF\xBB\xBF", 0) == 0) record.front().erase(0, 3);
  }
  return record;
}

std::string escape(const std::string& field, char separator) {
  if (field.find_first_of(std::string{separator, '"', '\n', '\r'}) == std::string::npos) {
    return field;
  }
  std::string out = "\"";
  for (char ch : field) {
    if (ch == '"') out.push_back('"');
    out.push_back(ch);
  }
  out.push_back('"');
  return out;
}

void write_record(std::ostream& out, const Record& record, char separator) {
  for (std::size_t i = 0; i < record.size(); ++i) {
    if (i) out.put(separator);
    out << escape(record[i], separator);
  }
  out << "\r\n";
}

}  // namespace taskforge::csv
