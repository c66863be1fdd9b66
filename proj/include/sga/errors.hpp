#pragma once

#include <stdexcept>
#include <string>

namespace sga {

/// Category of a failure. The CLI maps these onto process exit codes.
enum class ErrorKind {
  config,       // invalid configuration value or call in the wrong state
  shape,        // tensor dimension mismatch
  domain,       // argument outside a function's mathematical domain
  numeric,      // non-finite value produced
  empty_input,  // reduction or estimator over zero elements
  data,         // malformed labels or recorded values
  state,        // scheduler used out of order
  parse,        // malformed file contents
  io            // file could not be opened or written
};

const char* to_string(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

#define SGA_DEFINE_ERROR(Name, Kind)                                   \
  class Name : public Error {                                          \
   public:                                                             \
    explicit Name(const std::string& what) : Error(ErrorKind::Kind, what) {} \
  };

SGA_DEFINE_ERROR(ConfigError, config)
SGA_DEFINE_ERROR(ShapeError, shape)
SGA_DEFINE_ERROR(DomainError, domain)
SGA_DEFINE_ERROR(NumericError, numeric)
SGA_DEFINE_ERROR(EmptyInputError, empty_input)
SGA_DEFINE_ERROR(DataError, data)
SGA_DEFINE_ERROR(StateError, state)
SGA_DEFINE_ERROR(ParseError, parse)
SGA_DEFINE_ERROR(IoError, io)

#undef SGA_DEFINE_ERROR

}  // namespace sga
