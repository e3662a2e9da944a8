// Copyright (c) 2026 femkit contributors
// SPDX-License-Identifier:    MIT

#pragma once

#include "form.h"
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace femkit::fl
{

/// A coefficient declared in a form file.
struct CoefficientDecl
{
  int id = 0;
  std::string name;
  /// Element for Coefficient/Function declarations; null for
  /// point-evaluated coefficients (Expression, Constant(cell)).
  std::shared_ptr<const FiniteElement> element;
  /// Default value strings of an inline Expression(...), else empty.
  std::vector<std::string> expression;
  std::vector<int> shape;
  int degree = 0;
  /// The whole-coefficient terminal.
  Expr expr;
};

/// Result of parsing a form file.
struct FormFile
{
  /// Cell of the first element declared; forms use gdim = tdim.
  cell::Type cell = cell::Type::triangle;
  std::vector<std::pair<std::string, std::shared_ptr<const FiniteElement>>>
      elements;
  std::vector<CoefficientDecl> coefficients;
  /// Named forms in order of first assignment.
  std::vector<std::pair<std::string, Form>> forms;
  /// Named real parameters (e.g. `k = 0.05`).
  std::map<std::string, double> constants;

  bool has_form(const std::string& name) const;
  /// Throws UnknownIdentifier.
  const Form& form(const std::string& name) const;
  const CoefficientDecl* coefficient(const std::string& name) const;
  std::shared_ptr<const FiniteElement> element(const std::string& name) const;
};

/// Parse form-file text. Errors carry line and column: SyntaxError,
/// UnknownIdentifier, ShapeMismatch and the form validity errors.
FormFile parse_form_file(const std::string& text);

/// Read and parse a file (IoError if unreadable).
FormFile read_form_file(const std::string& path);

} // namespace femkit::fl
