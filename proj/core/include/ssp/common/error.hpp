#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace ssp {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Tensor or array shapes that do not fit an operation.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// Malformed or truncated binary/text file.
class FormatError : public Error {
 public:
  FormatError(const std::string& what, std::uint64_t offset, std::string field)
      : Error(what + " (field '" + field + "' at byte " + std::to_string(offset) + ")"),
        offset_(offset),
        field_(std::move(field)) {}

  std::uint64_t offset() const noexcept { return offset_; }
  const std::string& field() const noexcept { return field_; }

 private:
  std::uint64_t offset_;
  std::string field_;
};

// Invalid user configuration; carries the offending key.
class ConfigError : public Error {
 public:
  ConfigError(std::string field, const std::string& what)
      : Error(field + ": " + what), field_(std::move(field)) {}

  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

// NaN/Inf in a loss, gradient or learnable scalar.
class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace ssp
