// Copyright 2026 The mlasr Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace mlasr {

// Bad user-facing configuration: rejected values, unknown keys, shape
// mismatches caused by inconsistent settings. CLI exit code 1.
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Tensor dimension mismatch inside the math layer.
struct ShapeError : std::runtime_error {
  explicit ShapeError(const std::string& msg) : std::runtime_error(msg) {}
};

// An upper-layer expert was requested for a language the bank does not hold.
struct RoutingError : std::runtime_error {
  explicit RoutingError(const std::string& msg) : std::runtime_error(msg) {}
};

// Corpus generation or manifest validation failure.
struct CorpusError : std::runtime_error {
  explicit CorpusError(const std::string& msg) : std::runtime_error(msg) {}
};

// Malformed on-disk record; carries the offending line where known.
struct ParseError : std::runtime_error {
  explicit ParseError(const std::string& msg) : std::runtime_error(msg) {}
};

// A required upstream artifact (e.g. base checkpoint) is missing. CLI exit
// code 2.
struct DependencyError : std::runtime_error {
  explicit DependencyError(const std::string& msg) : std::runtime_error(msg) {}
};

// Numeric failure at runtime: non-finite loss, oracle guard exceeded. CLI
// exit code 3.
struct NumericError : std::runtime_error {
  explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

// Filesystem failure with the offending path in the message.
struct IoError : std::runtime_error {
  explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace mlasr
