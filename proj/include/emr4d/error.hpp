// Copyright 2026 The EMR4D Authors
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

#include <cstddef>
#include <stdexcept>
#include <string>

namespace emr4d {

/// Base class for every error raised by the codec.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Precondition violated by the caller (bad geometry, bad sizes, ...).
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// A covariance or position matrix could not be inverted.
class SingularMatrix : public Error {
 public:
  using Error::Error;
};

/// The .emr4d container itself is malformed (magic, version, truncation).
class ContainerError : public Error {
 public:
  using Error::Error;
};

/// A section of an otherwise well-formed container failed to decode.
class PayloadError : public Error {
 public:
  PayloadError(std::string section, const std::string& what)
      : Error(section + ": " + what), section_(std::move(section)) {}

  const std::string& section() const noexcept { return section_; }

 private:
  std::string section_;
};

/// Arithmetic-coded stream ended early or desynchronised.
class StreamError : public Error {
 public:
  StreamError(std::size_t offset, const std::string& what)
      : Error(what + " at byte " + std::to_string(offset)), offset_(offset) {}

  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

}  // namespace emr4d
