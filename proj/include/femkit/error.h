// Copyright (c) 2026 femkit contributors
// SPDX-License-Identifier:    MIT

#pragma once

#include <stdexcept>
#include <string>

namespace femkit
{

/// Error categories raised by the library. Each category is a stable
/// identifier that tests and the CLI can match on.
enum class ErrorKind
{
  IndexOutOfRange,
  DegenerateCell,
  InvalidDivisions,
  DimensionOutOfRange,
  Unsupported,
  NonManifold,
  UnsupportedFamily,
  BadDegree,
  PointOutsideReference,
  ShapeMismatch,
  SyntaxError,
  UnknownIdentifier,
  UnrestrictedInteriorFacet,
  MixedRanks,
  NonlinearInTrial,
  EmptyBilinear,
  UnsupportedNode,
  BadComponentCount,
  DegreeOutOfRange,
  UnsupportedExpression,
  MissingPattern,
  OutsidePattern,
  NoConvergence,
  SingularMatrix,
  UnboundCoefficient,
  MeshMismatch,
  MissingDiagonal,
  NewtonNoConvergence,
  UnsupportedKind,
  PointNotInMesh,
  NotMixed,
  ParseError,
  SchemaMismatch,
  IoError,
  InvalidArgument,
};

const char* to_string(ErrorKind kind);

/// Exception carrying an ErrorKind. Parse errors additionally carry a
/// 1-based line and column (0 when unknown).
class Error : public std::runtime_error
{
public:
  Error(ErrorKind kind, const std::string& message, int line = 0, int col = 0);

  ErrorKind kind() const { return _kind; }
  int line() const { return _line; }
  int column() const { return _col; }
  /// Message without kind and position.
  const std::string& message() const { return _message; }

private:
  ErrorKind _kind;
  std::string _message;
  int _line;
  int _col;
};

} // namespace femkit
