//
// Copyright 2026 The Geotrace Authors
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
//

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace geotrace {

enum class ErrorCode {
  kInvalidArgument,
  kOutOfBounds,
  kZeroDuration,
  kInvalidConfig,
  kMalformedRow,
  kEmptyTrace,
  kInsufficientPoints,
  kDegenerateFit,
  kUnlinkableInput,
  kShapeMismatch,
  kBadWeights,
  kIoError,
  kConfigParse,
};

inline std::string_view ErrorCodeName(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kOutOfBounds: return "OutOfBounds";
    case ErrorCode::kZeroDuration: return "ZeroDuration";
    case ErrorCode::kInvalidConfig: return "InvalidConfig";
    case ErrorCode::kMalformedRow: return "MalformedRow";
    case ErrorCode::kEmptyTrace: return "EmptyTrace";
    case ErrorCode::kInsufficientPoints: return "InsufficientPoints";
    case ErrorCode::kDegenerateFit: return "DegenerateFit";
    case ErrorCode::kUnlinkableInput: return "UnlinkableInput";
    case ErrorCode::kShapeMismatch: return "ShapeMismatch";
    case ErrorCode::kBadWeights: return "BadWeights";
    case ErrorCode::kIoError: return "IoError";
    case ErrorCode::kConfigParse: return "ConfigParse";
  }
  return "Unknown";
}

// All library failures are reported through this type. The code is stable and
// machine-readable; the message is for humans.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

// Row-level parse failure; `line()` is 1-based and counts the header.
class MalformedRowError : public Error {
 public:
  MalformedRowError(std::size_t line, const std::string& message)
      : Error(ErrorCode::kMalformedRow,
              "line " + std::to_string(line) + ": " + message),
        line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

}  // namespace geotrace
