// Copyright 2026 The stockgraph Authors
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

#pragma once

#include <stdexcept>
#include <string>

namespace stockgraph {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class ValidationError : public Error { using Error::Error; };
class DuplicateError : public Error { using Error::Error; };
class DimensionError : public Error { using Error::Error; };
class CoverageError : public Error { using Error::Error; };
class ConfigError : public Error { using Error::Error; };
class LookupError : public Error { using Error::Error; };
class IndexError : public Error { using Error::Error; };
class AlignmentError : public Error { using Error::Error; };
class DivergenceError : public Error { using Error::Error; };
class IoError : public Error { using Error::Error; };

}  // namespace stockgraph
