// Copyright 2026 The viewstyle Authors
// SPDX-License-Identifier: Apache-2.0

#include "viewstyle/error.hpp"

namespace viewstyle {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kNonPositiveDepth: return "NonPositiveDepth";
    case ErrorCode::kBadIndexOrder: return "BadIndexOrder";
    case ErrorCode::kEmptyMask: return "EmptyMask";
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kShapeMismatch: return "ShapeMismatch";
    case ErrorCode::kWeightOutOfRange: return "WeightOutOfRange";
    case ErrorCode::kGridTooCoarse: return "GridTooCoarse";
    case ErrorCode::kEmptyValidity: return "EmptyValidity";
    case ErrorCode::kCacheConflict: return "CacheConflict";
    case ErrorCode::kMagicMismatch: return "MagicMismatch";
    case ErrorCode::kTruncatedFile: return "TruncatedFile";
    case ErrorCode::kDimensionOverflow: return "DimensionOverflow";
    case ErrorCode::kIoError: return "IoError";
    case ErrorCode::kParseError: return "ParseError";
    case ErrorCode::kFrameFailed: return "FrameFailed";
  }
  return "Unknown";
}

}  // namespace viewstyle
