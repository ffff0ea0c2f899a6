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

#include "vunlearn/common/error.h"

namespace vunlearn {

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kConfig: return "config";
    case ErrorCode::kConstraint: return "constraint";
    case ErrorCode::kPrecondition: return "precondition";
    case ErrorCode::kDimensionMismatch: return "dimension_mismatch";
    case ErrorCode::kSize: return "size";
    case ErrorCode::kInvariant: return "invariant";
    case ErrorCode::kNotFitted: return "not_fitted";
    case ErrorCode::kDegenerate: return "degenerate";
    case ErrorCode::kDivergence: return "divergence";
    case ErrorCode::kIo: return "io";
    case ErrorCode::kMalformed: return "malformed";
    case ErrorCode::kTruncated: return "truncated";
    case ErrorCode::kChecksum: return "checksum";
    case ErrorCode::kVersion: return "version";
  }
  return "unknown";
}

}  // namespace vunlearn
