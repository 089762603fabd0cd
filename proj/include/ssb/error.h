// Copyright 2026 The SSB Codec Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef SSB_ERROR_H_
#define SSB_ERROR_H_

#include <stdexcept>
#include <string>

namespace ssb {

// Failure categories surfaced by the library. Every error thrown by the codec
// is an ssb::Error carrying one of these.
enum class ErrorCode {
  kDimension,     // shape or divisibility violation
  kAnnotation,    // annotation geometry out of bounds or malformed
  kCapacity,      // too many groups / field overflow
  kFormat,        // malformed or truncated byte stream
  kSelection,     // unknown group id requested
  kAvailability,  // requested substream not present
  kCompatibility, // weights / config / bitstream mismatch
  kDecode,        // range decoder state divergence
  kSequencing,    // ChARM slice order violation
  kKeyRequired,   // encrypted group decoded in strict mode without a key
  kIo,
  kConfig,
};

const char* ErrorCodeName(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(ErrorCodeName(code)) + ": " + what),
        code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void Fail(ErrorCode code, const std::string& what) {
  throw Error(code, what);
}

inline void Check(bool cond, ErrorCode code, const char* what) {
  if (!cond) Fail(code, what);
}

}  // namespace ssb

#endif  // SSB_ERROR_H_
