// Copyright 2026 The affectrl Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef AFFECTRL_ERRORS_HPP_
#define AFFECTRL_ERRORS_HPP_

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace affectrl {

// Base of every error the library throws.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define AFFECTRL_DEFINE_ERROR(Name)        \
  class Name : public Error {              \
   public:                                 \
    using Error::Error;                    \
  }

AFFECTRL_DEFINE_ERROR(InvalidSpec);
AFFECTRL_DEFINE_ERROR(InvalidAction);
AFFECTRL_DEFINE_ERROR(SteppedTerminal);
AFFECTRL_DEFINE_ERROR(IndexOutOfRange);
AFFECTRL_DEFINE_ERROR(NoActions);
AFFECTRL_DEFINE_ERROR(Unvisited);
AFFECTRL_DEFINE_ERROR(InvalidState);
AFFECTRL_DEFINE_ERROR(UnknownKey);
AFFECTRL_DEFINE_ERROR(InvalidParameter);
AFFECTRL_DEFINE_ERROR(WrongEnvironment);
AFFECTRL_DEFINE_ERROR(MismatchedSchedules);
AFFECTRL_DEFINE_ERROR(IoError);
AFFECTRL_DEFINE_ERROR(VersionMismatch);
AFFECTRL_DEFINE_ERROR(SchemaMismatch);
AFFECTRL_DEFINE_ERROR(UnknownSeries);

#undef AFFECTRL_DEFINE_ERROR

class ParseError : public Error {
 public:
  ParseError(std::string message, std::size_t line, std::size_t column)
      : Error(message + " (line " + std::to_string(line) + ", column " +
              std::to_string(column) + ")"),
        line_(line),
        column_(column) {}

  std::size_t line() const { return line_; }
  std::size_t column() const { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

struct FieldError {
  std::string field;  // dotted path, e.g. "agent.gamma"
  std::string reason;
};

// Carries every problem found while validating a document, not just the
// first one.
class ValidationError : public Error {
 public:
  explicit ValidationError(std::vector<FieldError> errors)
      : Error(Format(errors)), errors_(std::move(errors)) {}
  ValidationError(std::string field, std::string reason)
      : ValidationError(std::vector<FieldError>{
            {std::move(field), std::move(reason)}}) {}

  const std::vector<FieldError>& errors() const { return errors_; }

 private:
  static std::string Format(const std::vector<FieldError>& errors) {
    std::string out = "validation failed:";
    for (const auto& e : errors) out += "\n  " + e.field + ": " + e.reason;
    return out;
  }

  std::vector<FieldError> errors_;
};

}  // namespace affectrl

#endif  // AFFECTRL_ERRORS_HPP_
