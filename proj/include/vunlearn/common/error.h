//
// Copyright 2026 The vunlearn Authors.
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

#ifndef VUNLEARN_COMMON_ERROR_H_
#define VUNLEARN_COMMON_ERROR_H_

#include <stdexcept>
#include <string>
#include <string_view>

namespace vunlearn {

enum class ErrorCode {
  kConfig,             // invalid or missing configuration value
  kConstraint,         // coefficient admissibility (beta >= gamma, beta <= 1)
  kPrecondition,       // caller violated an operation precondition
  kDimensionMismatch,
  kSize,               // state space or buffer exceeds a hard cap
  kInvariant,          // input object violates its type invariants
  kNotFitted,
  kDegenerate,         // e.g. single-class labels where two are required
  kDivergence,         // non-finite loss during training
  kIo,
  kMalformed,          // unparseable or inconsistent header
  kTruncated,          // payload shorter than the header promises
  kChecksum,
  kVersion,
};

std::string_view error_code_name(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

inline void require(bool condition, ErrorCode code,
                    const std::string& message) {
  if (!condition) fail(code, message);
}

}  // namespace vunlearn

#endif  // VUNLEARN_COMMON_ERROR_H_
