// Copyright 2026 The HierTKG Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef HIERTKG_ERRORS_HPP_
#define HIERTKG_ERRORS_HPP_

#include <stdexcept>
#include <string>

namespace hiertkg {

// Base of every error raised by the library. Callers that only want to
// report failures can catch this one type.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class EmptyDatasetError : public Error {
 public:
  using Error::Error;
};

// Malformed input. `location()` is a record index, line number or file path,
// whichever the parser had at hand.
class ParseError : public Error {
 public:
  ParseError(const std::string& location, const std::string& what)
      : Error(location + ": " + what), location_(location) {}
  const std::string& location() const { return location_; }

 private:
  std::string location_;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class SchemaError : public Error {
 public:
  SchemaError(const std::string& column, const std::string& what)
      : Error(what + " (column '" + column + "')"), column_(column) {}
  const std::string& column() const { return column_; }

 private:
  std::string column_;
};

class IndexError : public Error {
 public:
  using Error::Error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

// Raised when training produces a non-finite loss.
class DiagnosticsError : public Error {
 public:
  DiagnosticsError(const std::string& what, int epoch, int batch,
                   double last_finite_loss)
      : Error(what),
        epoch_(epoch),
        batch_(batch),
        last_finite_loss_(last_finite_loss) {}
  int epoch() const { return epoch_; }
  int batch() const { return batch_; }
  double last_finite_loss() const { return last_finite_loss_; }

 private:
  int epoch_;
  int batch_;
  double last_finite_loss_;
};

}  // namespace hiertkg

#endif  // HIERTKG_ERRORS_HPP_
