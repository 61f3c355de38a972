// Copyright 2026 The fpbits Authors
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

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

namespace fpbits {

enum class ErrorCode {
  // template / image parsing
  MalformedHeader,
  FieldOutOfRange,
  AngleUnparseable,
  BadMagic,
  TruncatedRecord,
  UnsupportedVersion,
  DimensionMismatch,
  // numerics
  LengthMismatch,
  TooFewSamples,
  RankDeficient,
  PoolTooSmall,
  DegeneratePool,
  EmptyImage,
  EmptyTrainingSet,
  EmptyEnrollment,
  BadLength,
  EmptyScores,
  // harness
  ModelMissing,
  BadConfig,
  BadModelFile,
  IoError,
};

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::MalformedHeader: return "MalformedHeader";
    case ErrorCode::FieldOutOfRange: return "FieldOutOfRange";
    case ErrorCode::AngleUnparseable: return "AngleUnparseable";
    case ErrorCode::BadMagic: return "BadMagic";
    case ErrorCode::TruncatedRecord: return "TruncatedRecord";
    case ErrorCode::UnsupportedVersion: return "UnsupportedVersion";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::TooFewSamples: return "TooFewSamples";
    case ErrorCode::RankDeficient: return "RankDeficient";
    case ErrorCode::PoolTooSmall: return "PoolTooSmall";
    case ErrorCode::DegeneratePool: return "DegeneratePool";
    case ErrorCode::EmptyImage: return "EmptyImage";
    case ErrorCode::EmptyTrainingSet: return "EmptyTrainingSet";
    case ErrorCode::EmptyEnrollment: return "EmptyEnrollment";
    case ErrorCode::BadLength: return "BadLength";
    case ErrorCode::EmptyScores: return "EmptyScores";
    case ErrorCode::ModelMissing: return "ModelMissing";
    case ErrorCode::BadConfig: return "BadConfig";
    case ErrorCode::BadModelFile: return "BadModelFile";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

/// Every failure in the library is reported as an Error carrying a code.
/// Parsers additionally record the 1-based line (text formats) or byte
/// offset (binary formats) where the problem was found; 0 means unknown.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what, std::size_t location = 0)
      : std::runtime_error(std::string(to_string(code)) + ": " + what),
        code_(code),
        location_(location) {}

  ErrorCode code() const noexcept { return code_; }
  std::size_t location() const noexcept { return location_; }

 private:
  ErrorCode code_;
  std::size_t location_;
};

inline void require_same_length(std::size_t a, std::size_t b, const char* what) {
  if (a != b) {
    throw Error(ErrorCode::LengthMismatch,
                std::string(what) + ": " + std::to_string(a) + " vs " + std::to_string(b));
  }
}

}  // namespace fpbits
