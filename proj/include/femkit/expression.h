// Copyright (c) 2026 femkit contributors
// SPDX-License-Identifier:    MIT

#pragma once

#include <functional>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace femkit
{
class Mesh;

/// Anything that can be evaluated at a physical point: expressions and
/// discrete functions.
class GenericFunction
{
public:
  virtual ~GenericFunction() = default;

  /// Flattened value size (1 for scalars).
  virtual int value_size() const = 0;

  /// {} for scalars, {m} for vectors.
  virtual std::vector<int> value_shape() const
  {
    if (value_size() == 1)
      return {};
    return {value_size()};
  }

  /// Evaluate at physical point x (gdim entries).
  virtual void eval(std::span<const double> x, std::span<double> values) const = 0;

  /// Evaluate at a point known to lie in cell `cell` of `mesh`. Discrete
  /// functions on the same mesh use this to skip point location; the
  /// default ignores the hint.
  virtual void eval_cell(std::span<const double> x, const Mesh& mesh,
                         std::size_t cell, std::span<double> values) const
  {
    (void)mesh;
    (void)cell;
    eval(x, values);
  }
};

/// Parsed scalar expression over x[0..gdim) and named parameters.
class ScalarProgram
{
public:
  /// Grammar: reals, x[i], + - * / ^ (or **), unary minus, sin cos exp
  /// sqrt abs, pi, parentheses and parameter names from `params`.
  /// Throws SyntaxError or UnknownIdentifier.
  ScalarProgram(const std::string& text, int gdim,
                const std::vector<std::string>& params = {});

  double eval(const double* x, const double* params = nullptr) const;

  const std::string& text() const { return _text; }

private:
  struct Instr
  {
    int op;
    double value;
    int index;
  };
  std::string _text;
  std::vector<Instr> _code;
  int _stack = 0;
  friend class ProgramBuilder;
};

/// Point-evaluated coefficient: a tuple of parsed component strings or a
/// host callable.
class Expression : public GenericFunction
{
public:
  using Callable = std::function<void(const double* x, double* values)>;

  /// Components parsed from strings. A single string of the form
  /// "(a, b)" is a vector. If expected_size >= 0 the component count must
  /// match (BadComponentCount).
  Expression(const std::vector<std::string>& components, int gdim,
             int degree = 2, int expected_size = -1,
             const std::map<std::string, double>& params = {});

  Expression(Callable f, int value_size, int gdim, int degree = 2);

  /// Constant (possibly vector-valued) expression of degree 0.
  static std::shared_ptr<Expression> constant(std::vector<double> values,
                                              int gdim);

  int value_size() const override { return _size; }
  int gdim() const { return _gdim; }

  /// Declared degree used for quadrature estimation.
  int degree() const { return _degree; }

  void eval(std::span<const double> x, std::span<double> values) const override;

  /// Set a parameter declared at construction (e.g. time t).
  void set_parameter(const std::string& name, double value);
  double parameter(const std::string& name) const;

  /// Source strings (empty for callables).
  const std::vector<std::string>& components() const { return _sources; }

private:
  int _size = 1;
  int _gdim = 2;
  int _degree = 2;
  std::vector<std::string> _sources;
  std::vector<ScalarProgram> _programs;
  std::vector<std::string> _param_names;
  std::vector<double> _param_values;
  Callable _callable;
};

/// Split "(a, b, c)" at top-level commas; a string without an enclosing
/// tuple is returned as a single component.
std::vector<std::string> split_tuple(const std::string& text);

} // namespace femkit
