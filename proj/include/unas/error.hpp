// Copyright 2026 The unas Authors.
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

#ifndef UNAS_ERROR_HPP_
#define UNAS_ERROR_HPP_

#include <stdexcept>
#include <string>
#include <string_view>

namespace unas {

enum class ErrorCode {
  kInvalidSpace,
  kArithmeticOverflow,
  kUnsupportedSpace,
  kMalformedSyntax,
  kWrongLength,
  kValueNotInAlphabet,
  kInvalidGenome,
  kResolutionNotDivisible,
  kInvalidDocument,
  kEmptyPopulation,
  kNonpositiveFitness,
  kUnevaluatedPopulation,
  kNonFiniteInput,
  kNonpositiveDenominator,
  kSpaceMismatch,
  kConfigInvalid,
  kCheckpointIo,
  kCorruptCheckpoint,
};

constexpr std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidSpace: return "invalid-space";
    case ErrorCode::kArithmeticOverflow: return "arithmetic-overflow";
    case ErrorCode::kUnsupportedSpace: return "unsupported-space";
    case ErrorCode::kMalformedSyntax: return "malformed-syntax";
    case ErrorCode::kWrongLength: return "wrong-length";
    case ErrorCode::kValueNotInAlphabet: return "value-not-in-alphabet";
    case ErrorCode::kInvalidGenome: return "invalid-genome";
    case ErrorCode::kResolutionNotDivisible: return "resolution-not-divisible";
    case ErrorCode::kInvalidDocument: return "invalid-document";
    case ErrorCode::kEmptyPopulation: return "empty-population";
    case ErrorCode::kNonpositiveFitness: return "nonpositive-fitness";
    case ErrorCode::kUnevaluatedPopulation: return "unevaluated-population";
    case ErrorCode::kNonFiniteInput: return "non-finite-input";
    case ErrorCode::kNonpositiveDenominator: return "nonpositive-denominator";
    case ErrorCode::kSpaceMismatch: return "space-mismatch";
    case ErrorCode::kConfigInvalid: return "config-invalid";
    case ErrorCode::kCheckpointIo: return "checkpoint-io";
    case ErrorCode::kCorruptCheckpoint: return "corrupt-checkpoint";
  }
  return "unknown";
}

/// Every failure raised by the library carries one of the codes above; the
/// message is prefixed with the code name so CLI output stays greppable.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& detail)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + detail),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace unas

#endif  // UNAS_ERROR_HPP_
