// Copyright 2026 The encdb Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace encdb {

enum class Errc {
  kInvalidArgument,
  kEpochMismatch,
  kNoiseOverflow,
  kLadderExhausted,
  kForeignKey,
  kWidthMismatch,
  kSchemaMismatch,
  kUnknownColumn,
  kDuplicateColumn,
  kValueOverflow,
  kFetchTooLarge,
  kVerificationFailure,
  kParseError,
  kUnknownTable,
  kTypeError,
  kDecodeError,
};

constexpr std::string_view to_string(Errc code) {
  switch (code) {
    case Errc::kInvalidArgument: return "InvalidArgument";
    case Errc::kEpochMismatch: return "EpochMismatch";
    case Errc::kNoiseOverflow: return "NoiseOverflow";
    case Errc::kLadderExhausted: return "LadderExhausted";
    case Errc::kForeignKey: return "ForeignKey";
    case Errc::kWidthMismatch: return "WidthMismatch";
    case Errc::kSchemaMismatch: return "SchemaMismatch";
    case Errc::kUnknownColumn: return "UnknownColumn";
    case Errc::kDuplicateColumn: return "DuplicateColumn";
    case Errc::kValueOverflow: return "ValueOverflow";
    case Errc::kFetchTooLarge: return "FetchTooLarge";
    case Errc::kVerificationFailure: return "VerificationFailure";
    case Errc::kParseError: return "ParseError";
    case Errc::kUnknownTable: return "UnknownTable";
    case Errc::kTypeError: return "TypeError";
    case Errc::kDecodeError: return "DecodeError";
  }
  return "Unknown";
}

/// Single exception type for the library; callers branch on code().
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace encdb
