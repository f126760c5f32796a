// Copyright 2026 The fpsearch Authors.
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

#ifndef FPSEARCH_ERROR_H_
#define FPSEARCH_ERROR_H_

#include <stdexcept>
#include <string>
#include <string_view>

namespace fpsearch {

enum class ErrorCode {
  kInvalidArgument,
  kNotFound,
  kAlreadyExists,
  kFailedPrecondition,
  kDataLoss,
  kIo,
  kInternal,
};

std::string_view ErrorCodeName(ErrorCode code);

// Single exception type for the library. The code distinguishes caller
// faults (invalid argument, not found, ...) from environment faults so the
// service layer can map them onto 4xx/5xx.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }
  bool IsClientFault() const noexcept {
    return code_ != ErrorCode::kIo && code_ != ErrorCode::kInternal;
  }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void Throw(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

#define FPS_CHECK_ARG(cond, msg)                                       \
  do {                                                                 \
    if (!(cond)) ::fpsearch::Throw(::fpsearch::ErrorCode::kInvalidArgument, \
                                   (msg));                            \
  } while (0)

}  // namespace fpsearch

#endif  // FPSEARCH_ERROR_H_
