// Copyright 2026 The sweepret Authors
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
#include <string_view>

namespace sweepret {

enum class ErrorCode {
  kInvalidArgument,
  kShapeMismatch,
  kNonFinite,
  kIo,
  kFormat,
  kOutOfRange,
  kConfig,
};

std::string_view to_string(ErrorCode code);

/// Error carrying a machine-readable code and the context it was raised in
/// (a graph node, a parameter name, a file path...).
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, std::string context, const std::string& message)
      : std::runtime_error(context.empty() ? message : context + ": " + message),
        code_(code),
        context_(std::move(context)),
        detail_(message) {}

  ErrorCode code() const noexcept { return code_; }
  const std::string& context() const noexcept { return context_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorCode code_;
  std::string context_;
  std::string detail_;
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "invalid_argument";
    case ErrorCode::kShapeMismatch: return "shape_mismatch";
    case ErrorCode::kNonFinite: return "non_finite";
    case ErrorCode::kIo: return "io";
    case ErrorCode::kFormat: return "format";
    case ErrorCode::kOutOfRange: return "out_of_range";
    case ErrorCode::kConfig: return "config";
  }
  return "unknown";
}

}  // namespace sweepret
