// Copyright (c) 2026 The tdsc developers
// SPDX-License-Identifier: Apache-2.0

#include "tds/errors.hpp"

namespace tds {

const char* errc_name(Errc c) {
  switch (c) {
    case Errc::DimensionMismatch: return "DimensionMismatch";
    case Errc::NegativeDelay: return "NegativeDelay";
    case Errc::NeutralZeroDelay: return "NeutralZeroDelay";
    case Errc::DdaeMissingZeroDelay: return "DdaeMissingZeroDelay";
    case Errc::AdvancedSystem: return "AdvancedSystem";
    case Errc::ImproperTransferFunction: return "ImproperTransferFunction";
    case Errc::SingularA22: return "SingularA22";
    case Errc::NotApplicable: return "NotApplicable";
    case Errc::NoPerformanceChannels: return "NoPerformanceChannels";
    case Errc::IterationFailure: return "IterationFailure";
    case Errc::OutOfInterval: return "OutOfInterval";
    case Errc::NotSiso: return "NotSiso";
    case Errc::SingularAtS: return "SingularAtS";
    case Errc::NotStronglyStableDifference: return "NotStronglyStableDifference";
    case Errc::LineSearchFailure: return "LineSearchFailure";
    case Errc::AllStartsFailed: return "AllStartsFailed";
    case Errc::ShapeMismatch: return "ShapeMismatch";
    case Errc::IndexOutOfRange: return "IndexOutOfRange";
    case Errc::UnsupportedUncertaintyKind: return "UnsupportedUncertaintyKind";
    case Errc::FailedStronglyStabilizing: return "FailedStronglyStabilizing";
    case Errc::DefectiveRoot: return "DefectiveRoot";
    case Errc::NoSignChange: return "NoSignChange";
    case Errc::NonFiniteEntry: return "NonFiniteEntry";
    case Errc::ParseError: return "ParseError";
  }
  return "UnknownError";
}

}  // namespace tds
