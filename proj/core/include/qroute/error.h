// Copyright 2026 The qroute Authors.
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

#ifndef QROUTE_ERROR_H_
#define QROUTE_ERROR_H_

#include <stdexcept>
#include <string>
#include <string_view>

namespace qroute {

// Coarse error classes. The service maps kInvalidArgument and kNotFound to
// 4xx responses and everything else to 5xx.
enum class ErrorCode {
  kInvalidArgument,
  kNotFound,
  kAlreadyExists,
  kFailedPrecondition,
  kDataLoss,
  kInternal,
};

std::string_view ErrorCodeName(ErrorCode code);

// All library failures are reported by throwing Error.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] void ThrowInvalidArgument(const std::string& message);
[[noreturn]] void ThrowNotFound(const std::string& message);
[[noreturn]] void ThrowDataLoss(const std::string& message);
[[noreturn]] void ThrowFailedPrecondition(const std::string& message);

}  // namespace qroute

#endif  // QROUTE_ERROR_H_
