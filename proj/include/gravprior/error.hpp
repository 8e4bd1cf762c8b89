/*
 *  Copyright (C) 2026 The gravprior Authors
 *
 *  SPDX-License-Identifier: Apache-2.0
 *  See the file LICENSE.txt for more information.
 */

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace gravprior
{

enum class ErrorKind
{
  DegenerateVector,
  NonMonotonicTime,
  EmptyStream,
  FrameBeforeStream,
  InsufficientPairs,
  NoConvergence,
  NoTemporalOverlap,
  EmptyWindow,
  MissingFile,
  MalformedRow,
  ShapeMismatch,
  EmptyBatch,
  EmptyInput,
  InvalidArgument,
};

constexpr std::string_view to_string(ErrorKind kind)
{
  switch (kind)
  {
    case ErrorKind::DegenerateVector: return "DegenerateVector";
    case ErrorKind::NonMonotonicTime: return "NonMonotonicTime";
    case ErrorKind::EmptyStream: return "EmptyStream";
    case ErrorKind::FrameBeforeStream: return "FrameBeforeStream";
    case ErrorKind::InsufficientPairs: return "InsufficientPairs";
    case ErrorKind::NoConvergence: return "NoConvergence";
    case ErrorKind::NoTemporalOverlap: return "NoTemporalOverlap";
    case ErrorKind::EmptyWindow: return "EmptyWindow";
    case ErrorKind::MissingFile: return "MissingFile";
    case ErrorKind::MalformedRow: return "MalformedRow";
    case ErrorKind::ShapeMismatch: return "ShapeMismatch";
    case ErrorKind::EmptyBatch: return "EmptyBatch";
    case ErrorKind::EmptyInput: return "EmptyInput";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

/// Every failure raised by the library. `kind()` is stable and is what
/// callers (and the CLI exit-code mapping) switch on.
class Error : public std::runtime_error
{
public:
  Error(ErrorKind kind, const std::string& what)
    : std::runtime_error(std::string(to_string(kind)) + ": " + what), m_kind(kind)
  {
  }

  ErrorKind kind() const noexcept { return m_kind; }

private:
  ErrorKind m_kind;
};

/// Parse failures remember the 1-based line they came from.
class MalformedRowError : public Error
{
public:
  MalformedRowError(const std::string& file, std::size_t line, const std::string& why)
    : Error(ErrorKind::MalformedRow, file + ":" + std::to_string(line) + ": " + why),
      m_line(line)
  {
  }

  std::size_t line() const noexcept { return m_line; }

private:
  std::size_t m_line;
};

/// True for failures caused by the numbers themselves rather than the inputs'
/// presence or syntax.
constexpr bool is_numeric_failure(ErrorKind kind)
{
  return kind == ErrorKind::NoConvergence || kind == ErrorKind::DegenerateVector;
}

} // namespace gravprior
