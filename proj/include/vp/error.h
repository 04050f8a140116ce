#ifndef VP_ERROR_H_
#define VP_ERROR_H_

#include <cstddef>
#include <stdexcept>
#include <string>

namespace vp {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input record. `line()` is 1-based, or 0 when not line-oriented.
class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : Error(line > 0 ? "line " + std::to_string(line) + ": " + what : what),
        line_(line) {}

  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

// Corrupt, truncated or incompatible model file.
class ModelFormatError : public Error {
 public:
  using Error::Error;
};

}  // namespace vp

#endif  // VP_ERROR_H_
