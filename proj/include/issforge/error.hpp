#pragma once

#include <stdexcept>
#include <string>

namespace issforge {

// Base class of every error the toolchain reports.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A malformed description file. Line and column are 1-based; zero when the
// location is not known.
class ParseError : public Error {
 public:
  ParseError(std::string file, int line, int column, std::string unit, std::string message);

  const std::string& file() const { return file_; }
  int line() const { return line_; }
  int column() const { return column_; }
  const std::string& unit() const { return unit_; }
  const std::string& message() const { return message_; }

 private:
  std::string file_;
  int line_;
  int column_;
  std::string unit_;
  std::string message_;
};

}  // namespace issforge
