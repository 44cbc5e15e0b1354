// Copyright 2026 PaxNet contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace paxnet {

// Base class for all recoverable errors raised by the library.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Malformed text input (PDB, xyz, manifest, report). Carries a 1-based line
// number when one is known.
struct ParseError : Error {
  explicit ParseError(const std::string& what, long line = -1)
      : Error(with_line(what, line)), line_number(line) {}

  long line_number;

 private:
  static std::string with_line(const std::string& what, long line) {
    if (line < 0) return what;
    return "line " + std::to_string(line) + ": " + what;
  }
};

// Empty, degenerate, mismatched or otherwise unusable atomic structures.
struct StructureError : Error {
  using Error::Error;
};

// Tensor shape mismatch; the message names the offending op.
struct ShapeError : Error {
  using Error::Error;
};

// An op produced a NaN or infinity.
struct NumericError : Error {
  using Error::Error;
};

// Argument outside an operation's domain.
struct DomainError : Error {
  using Error::Error;
};

// Dangling edge or triplet reference.
struct IndexError : Error {
  using Error::Error;
};

// File and serialization failures, including corrupt checkpoints.
struct IoError : Error {
  using Error::Error;
};

// Inconsistent configuration (checkpoint/config shape conflicts, bad modes).
struct ConfigError : Error {
  using Error::Error;
};

}  // namespace paxnet
