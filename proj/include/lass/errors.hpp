/* Copyright 2026 The LaSS Lab Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/
#pragma once

#include <stdexcept>
#include <string>

namespace lass {

// Every failure raised by the library derives from Error. The kind decides
// the CLI exit code (see exit_code_for).
enum class ErrorKind {
  kConfig,        // bad configuration value or unknown key
  kData,          // malformed or out-of-range input data
  kNumerical,     // non-finite loss or gradient
  kStructural,    // shape / fingerprint / tensor-set mismatch
  kFormat,        // binary file decode failure
  kLookup,        // unknown pair, language or tensor
  kUsage,         // caller violated an operation's contract
  kPrecondition,  // argument outside the operation's domain
  kCapacity,      // sequence longer than the model supports
  kPrerequisite,  // pipeline artifact missing
  kIo,            // filesystem failure
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

#define LASS_DEFINE_ERROR(Name, Kind)                               \
  class Name : public Error {                                       \
   public:                                                          \
    explicit Name(const std::string& what) : Error(Kind, what) {}   \
  };

LASS_DEFINE_ERROR(ConfigError, ErrorKind::kConfig)
LASS_DEFINE_ERROR(DataError, ErrorKind::kData)
LASS_DEFINE_ERROR(StructuralError, ErrorKind::kStructural)
LASS_DEFINE_ERROR(LookupError, ErrorKind::kLookup)
LASS_DEFINE_ERROR(UsageError, ErrorKind::kUsage)
LASS_DEFINE_ERROR(PreconditionError, ErrorKind::kPrecondition)
LASS_DEFINE_ERROR(CapacityError, ErrorKind::kCapacity)
LASS_DEFINE_ERROR(PrerequisiteError, ErrorKind::kPrerequisite)
LASS_DEFINE_ERROR(IoError, ErrorKind::kIo)

#undef LASS_DEFINE_ERROR

class NumericalError : public Error {
 public:
  explicit NumericalError(const std::string& what)
      : Error(ErrorKind::kNumerical, what) {}
};

// Binary decode failure; carries the byte offset where decoding stopped.
class FormatError : public Error {
 public:
  FormatError(const std::string& what, std::size_t offset)
      : Error(ErrorKind::kFormat,
              what + " (at byte offset " + std::to_string(offset) + ")"),
        offset_(offset) {}
  explicit FormatError(const std::string& what)
      : Error(ErrorKind::kFormat, what), offset_(0) {}

  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

}  // namespace lass
