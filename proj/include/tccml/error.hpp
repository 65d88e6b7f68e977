/*
 * Copyright 2026 The tccml Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *   http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <stdexcept>
#include <string>

namespace tccml {

/// Base class for all errors raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Input file missing, unreadable or malformed (ratings, tags, splits).
class IngestError : public Error {
 public:
  using Error::Error;
};

/// Checkpoint or output-file format mismatch.
class FormatError : public Error {
 public:
  using Error::Error;
};

/// Bad key/value in a config or grid file. `line` is 1-based, 0 if unknown.
class ConfigError : public Error {
 public:
  ConfigError(const std::string& what, std::size_t line = 0)
    : Error(line ? what + " (line " + std::to_string(line) + ")" : what),
      line_(line) {}

  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

/// Precondition violated by a caller (bad dimension, empty pool, ...).
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Training produced a non-finite value.
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace tccml
