// Copyright 2026 The PPA Authors
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
#include <string_view>

namespace ppa {

enum class ErrorCode {
  IllegalTransition,
  InvariantViolation,
  DecodeError,
  EmptyPrompt,
  ParseError,
  DimensionMismatch,
  MalformedDetection,
  BackendUnavailable,
  BackendTimeout,
  BackendHttpError,
  ReplayMiss,
  DuplicateKey,
  ProtectedModeViolation,
  DomainError,
  AllCandidatesFailed,
  NotAnalyzed,
  UnknownCandidate,
  NotFound,
  Forbidden,
  DegenerateInput,
  ConfigError,
  IoError,
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::IllegalTransition: return "IllegalTransition";
    case ErrorCode::InvariantViolation: return "InvariantViolation";
    case ErrorCode::DecodeError: return "DecodeError";
    case ErrorCode::EmptyPrompt: return "EmptyPrompt";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::MalformedDetection: return "MalformedDetection";
    case ErrorCode::BackendUnavailable: return "BackendUnavailable";
    case ErrorCode::BackendTimeout: return "BackendTimeout";
    case ErrorCode::BackendHttpError: return "BackendHttpError";
    case ErrorCode::ReplayMiss: return "ReplayMiss";
    case ErrorCode::DuplicateKey: return "DuplicateKey";
    case ErrorCode::ProtectedModeViolation: return "ProtectedModeViolation";
    case ErrorCode::DomainError: return "DomainError";
    case ErrorCode::AllCandidatesFailed: return "AllCandidatesFailed";
    case ErrorCode::NotAnalyzed: return "NotAnalyzed";
    case ErrorCode::UnknownCandidate: return "UnknownCandidate";
    case ErrorCode::NotFound: return "NotFound";
    case ErrorCode::Forbidden: return "Forbidden";
    case ErrorCode::DegenerateInput: return "DegenerateInput";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

// Every failure surfaced by the library carries a machine-readable code.
// The REST layer maps codes onto problem-JSON responses.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message),
        code_(code),
        detail_(message) {}

  ErrorCode code() const noexcept { return code_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorCode code_;
  std::string detail_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace ppa
