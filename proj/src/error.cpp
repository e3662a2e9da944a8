// Copyright (c) 2026 femkit contributors
// SPDX-License-Identifier:    MIT

#include <femkit/error.h>

using namespace femkit;

namespace
{
std::string decorate(ErrorKind kind, const std::string& msg, int line, int col)
{
  std::string s = std::string(to_string(kind)) + ": " + msg;
  if (line > 0)
  {
    s += " (line " + std::to_string(line);
    if (col > 0)
      s += ", column " + std::to_string(col);
    s += ")";
  }
  return s;
}
} // namespace

//-----------------------------------------------------------------------------
const char* femkit::to_string(ErrorKind kind)
{
  switch (kind)
  {
  case ErrorKind::IndexOutOfRange: return "IndexOutOfRange";
  case ErrorKind::DegenerateCell: return "DegenerateCell";
  case ErrorKind::InvalidDivisions: return "InvalidDivisions";
  case ErrorKind::DimensionOutOfRange: return "DimensionOutOfRange";
  case ErrorKind::Unsupported: return "Unsupported";
  case ErrorKind::NonManifold: return "NonManifold";
  case ErrorKind::UnsupportedFamily: return "UnsupportedFamily";
  case ErrorKind::BadDegree: return "BadDegree";
  case ErrorKind::PointOutsideReference: return "PointOutsideReference";
  case ErrorKind::ShapeMismatch: return "ShapeMismatch";
  case ErrorKind::SyntaxError: return "SyntaxError";
  case ErrorKind::UnknownIdentifier: return "UnknownIdentifier";
  case ErrorKind::UnrestrictedInteriorFacet: return "UnrestrictedInteriorFacet";
  case ErrorKind::MixedRanks: return "MixedRanks";
  case ErrorKind::NonlinearInTrial: return "NonlinearInTrial";
  case ErrorKind::EmptyBilinear: return "EmptyBilinear";
  case ErrorKind::UnsupportedNode: return "UnsupportedNode";
  case ErrorKind::BadComponentCount: return "BadComponentCount";
  case ErrorKind::DegreeOutOfRange: return "DegreeOutOfRange";
  case ErrorKind::UnsupportedExpression: return "UnsupportedExpression";
  case ErrorKind::MissingPattern: return "MissingPattern";
  case ErrorKind::OutsidePattern: return "OutsidePattern";
  case ErrorKind::NoConvergence: return "NoConvergence";
  case ErrorKind::SingularMatrix: return "SingularMatrix";
  case ErrorKind::UnboundCoefficient: return "UnboundCoefficient";
  case ErrorKind::MeshMismatch: return "MeshMismatch";
  case ErrorKind::MissingDiagonal: return "MissingDiagonal";
  case ErrorKind::NewtonNoConvergence: return "NewtonNoConvergence";
  case ErrorKind::UnsupportedKind: return "UnsupportedKind";
  case ErrorKind::PointNotInMesh: return "PointNotInMesh";
  case ErrorKind::NotMixed: return "NotMixed";
  case ErrorKind::ParseError: return "ParseError";
  case ErrorKind::SchemaMismatch: return "SchemaMismatch";
  case ErrorKind::IoError: return "IoError";
  case ErrorKind::InvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}
//-----------------------------------------------------------------------------
Error::Error(ErrorKind kind, const std::string& message, int line, int col)
    : std::runtime_error(decorate(kind, message, line, col)), _kind(kind),
      _message(message), _line(line), _col(col)
{
}
//-----------------------------------------------------------------------------
