// Copyright (c) 2026 The tdsc developers
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace tds {

enum class Errc {
  DimensionMismatch,
  NegativeDelay,
  NeutralZeroDelay,
  DdaeMissingZeroDelay,
  AdvancedSystem,
  ImproperTransferFunction,
  SingularA22,
  NotApplicable,
  NoPerformanceChannels,
  IterationFailure,
  OutOfInterval,
  NotSiso,
  SingularAtS,
  NotStronglyStableDifference,
  LineSearchFailure,
  AllStartsFailed,
  ShapeMismatch,
  IndexOutOfRange,
  UnsupportedUncertaintyKind,
  FailedStronglyStabilizing,
  DefectiveRoot,
  NoSignChange,
  NonFiniteEntry,
  ParseError,
};

const char* errc_name(Errc c);

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}
  Errc code() const { return code_; }

 private:
  Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& what) { throw Error(code, what); }

}  // namespace tds
