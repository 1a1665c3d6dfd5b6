/*
 * Copyright 2026 The AMRule Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef AMRULE_ERROR_HPP_
#define AMRULE_ERROR_HPP_

#include <stdexcept>
#include <string>
#include <string_view>

namespace amrule {

enum class ErrorCode {
  kIngestion,
  kEmptyPositive,
  kSplit,
  kConfig,
  kShape,
  kEmptyDataset,
  kDegenerateData,
  kDivergence,
  kOverflow,
  kPromptUnavailable,
  kTransport,
  kProtocol,
  kConflict,
  kValidation,
  kNotFound,
  kIncompleteSession,
  kSchemaVersion,
  kIo,
};

std::string_view ErrorCodeName(ErrorCode code);

// All failures raised by the library carry a machine-readable code so the
// CLI and the annotation service can map them to exit codes / HTTP statuses.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace amrule

#endif  // AMRULE_ERROR_HPP_
