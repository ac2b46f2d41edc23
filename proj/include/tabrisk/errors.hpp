/*
 * Copyright 2026 The tabrisk Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef TABRISK_ERRORS_HPP_
#define TABRISK_ERRORS_HPP_

#include <cstddef>
#include <stdexcept>
#include <string>

namespace tabrisk {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Precondition or argument violation.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// Malformed schema document or invalid feature declaration.
class SchemaError : public Error {
 public:
  using Error::Error;
};

// Input data that cannot be parsed or encoded. Row and column locate the
// offending cell; row is 1-based over data lines (the header is row 0).
class DataError : public Error {
 public:
  DataError(const std::string& message, std::size_t row, std::string column)
      : Error(Format(message, row, column)), row_(row), column_(std::move(column)) {}
  explicit DataError(const std::string& message) : Error(message) {}

  std::size_t row() const { return row_; }
  const std::string& column() const { return column_; }

 private:
  static std::string Format(const std::string& message, std::size_t row,
                            const std::string& column) {
    return "row " + std::to_string(row) + ", column '" + column + "': " + message;
  }

  std::size_t row_ = 0;
  std::string column_;
};

// Numerical failure during optimization (non-finite loss or gradient).
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace tabrisk

#endif  // TABRISK_ERRORS_HPP_
