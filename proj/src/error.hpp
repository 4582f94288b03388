// Copyright 2026 The spilldid Authors
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

#pragma once

#include <stdexcept>
#include <string>

namespace spilldid {

// Numeric values double as CLI exit codes.
enum class ErrorCode : int {
  kValidation = 2,
  kInference = 3,
  kIo = 4,
  kInternal = 5,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

inline Error validation_error(const std::string& message) {
  return Error(ErrorCode::kValidation, message);
}
inline Error io_error(const std::string& message) {
  return Error(ErrorCode::kIo, message);
}
inline Error inference_error(const std::string& message) {
  return Error(ErrorCode::kInference, message);
}

}  // namespace spilldid
