/*
 Copyright 2026 The horizon-pmp Authors

 Licensed under the Apache License, Version 2.0 (the "License");
 you may not use this file except in compliance with the License.
 You may obtain a copy of the License at

      https://www.apache.org/licenses/LICENSE-2.0

 Unless required by applicable law or agreed to in writing, software
 distributed under the License is distributed on an "AS IS" BASIS,
 WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 See the License for the specific language governing permissions and
 limitations under the License.
*/

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace hpmp {

/// Base class of every error raised by the toolkit.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed expression text. `offset` is the byte offset of the offending token.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t offset)
      : Error(what + " at offset " + std::to_string(offset)), offset_(offset) {}
  [[nodiscard]] std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

/// Evaluation left the domain of an operation (log of nonpositive, 0^negative, ...).
/// `node` is the printed form of the offending subexpression.
class DomainError : public Error {
 public:
  DomainError(const std::string& what, std::string node)
      : Error(what + " in '" + node + "'"), node_(std::move(node)) {}
  [[nodiscard]] const std::string& node() const noexcept { return node_; }

 private:
  std::string node_;
};

class UnboundVariableError : public Error {
 public:
  using Error::Error;
};

/// Problem document is missing a field, has a wrong type, or has inconsistent dimensions.
class ConfigError : public Error {
 public:
  using Error::Error;
};

class PreconditionError : public Error {
 public:
  using Error::Error;
};

class SingularMatrixError : public Error {
 public:
  using Error::Error;
};

/// ODE integration failure. `time` is where the failure was detected
/// (for blow-up this is the escape-time estimate).
class IntegrationError : public Error {
 public:
  enum class Kind { BlowUp, StepUnderflow, TooManySteps };
  IntegrationError(Kind kind, double time, const std::string& what)
      : Error(what), kind_(kind), time_(time) {}
  [[nodiscard]] Kind kind() const noexcept { return kind_; }
  [[nodiscard]] double time() const noexcept { return time_; }

 private:
  Kind kind_;
  double time_;
};

}  // namespace hpmp
