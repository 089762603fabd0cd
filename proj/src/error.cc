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

#include "ssb/error.h"

namespace ssb {

const char* ErrorCodeName(ErrorCode code) {
  switch (code) {
    case ErrorCode::kDimension: return "dimension error";
    case ErrorCode::kAnnotation: return "annotation error";
    case ErrorCode::kCapacity: return "capacity error";
    case ErrorCode::kFormat: return "format error";
    case ErrorCode::kSelection: return "selection error";
    case ErrorCode::kAvailability: return "availability error";
    case ErrorCode::kCompatibility: return "compatibility error";
    case ErrorCode::kDecode: return "decode error";
    case ErrorCode::kSequencing: return "sequencing error";
    case ErrorCode::kKeyRequired: return "key required";
    case ErrorCode::kIo: return "i/o error";
    case ErrorCode::kConfig: return "config error";
  }
  return "error";
}

}  // namespace ssb
