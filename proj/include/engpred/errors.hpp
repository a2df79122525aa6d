#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace engpred {

// Bad input data or violated data invariants. CLI exit code 2.
class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

// Bad arguments or configuration. CLI exit code 1.
class UsageError : public std::runtime_error {
 public:
  explicit UsageError(const std::string& msg) : std::runtime_error(msg) {}
};

// Malformed input line; carries position information.
class ParseError : public DataError {
 public:
  ParseError(const std::string& msg, std::size_t line_no, int field_index)
      : DataError(msg + " (line " + std::to_string(line_no) + ", field " +
                  std::to_string(field_index) + ")"),
        line_no(line_no),
        field_index(field_index) {}

  std::size_t line_no;
  int field_index;  // 0-based column index, -1 when the whole line is at fault
};

}  // namespace engpred
