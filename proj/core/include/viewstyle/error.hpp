// Copyright 2026 The viewstyle Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace viewstyle {

enum class ErrorCode {
  kInvalidArgument,
  kNonPositiveDepth,
  kBadIndexOrder,
  kEmptyMask,
  kDimensionMismatch,
  kShapeMismatch,
  kWeightOutOfRange,
  kGridTooCoarse,
  kEmptyValidity,
  kCacheConflict,
  kMagicMismatch,
  kTruncatedFile,
  kDimensionOverflow,
  kIoError,
  kParseError,
  kFrameFailed,
};

std::string_view to_string(ErrorCode code);

/// Single exception type for every data-dependent failure in the library.
/// The code is the machine-readable part; the message is for humans.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace viewstyle
