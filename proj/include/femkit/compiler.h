// Copyright (c) 2026 femkit contributors
// SPDX-License-Identifier:    MIT

#pragma once

#include "element.h"
#include "expression.h"
#include "form.h"
#include "quadrature.h"
#include <array>
#include <memory>
#include <span>
#include <string>
#include <vector>

/// Lowering of forms to element kernels: quadrature tables plus a flat
/// scalar program evaluated at every quadrature point.
namespace femkit
{
class Mesh;

enum class IntegralKind
{
  cell,
  exterior_facet,
  interior_facet
};

std::string to_string(IntegralKind kind);

/// Coefficient slot of a compiled form.
struct CoefficientInfo
{
  int id = 0;
  std::string name;
  /// Null for point-evaluated coefficients.
  std::shared_ptr<const FiniteElement> element;
  int value_size = 1;
  int degree = 0;
};

/// Named constant with its value in the form.
struct ConstantInfo
{
  std::string name;
  double value = 0.0;
};

/// One tape instruction. Operands a and b index earlier instructions.
struct Instruction
{
  enum Op : std::uint8_t
  {
    constant,
    param,
    coordinate,
    argument,
    coefficient,
    point_coefficient,
    normal,
    cell_size,
    neg,
    add,
    sub,
    mul,
    div,
    pow,
    sin,
    cos,
    exp,
    sqrt,
    abs,
    sign
  };
  Op op = constant;
  /// Bit 0: depends on the test index, bit 1: on the trial index.
  std::uint8_t level = 0;
  std::int32_t a = -1;
  std::int32_t b = -1;
  /// constant value or exponent
  double value = 0.0;
  /// Terminal data: argument {slot, side, component, derivative},
  /// coefficient {index, side, component, derivative}, point coefficient
  /// {index, component}, coordinate/normal {component, side},
  /// cell size {side}, param {index}. Derivative -1 is the value.
  std::array<std::int32_t, 4> ints{0, 0, 0, -1};
};

const char* to_string(Instruction::Op op);

/// Inputs of one tabulate_tensor call.
struct TabulateArgs
{
  /// Vertex coordinates of the cell; interior facets: '+' cell then '-'.
  std::span<const double> coordinates;
  /// Local values of every element coefficient, concatenated in kernel
  /// coefficient order; interior facets: '+' block then '-' block per
  /// coefficient.
  std::span<const double> coefficients;
  /// One evaluator per point coefficient, in kernel order.
  std::span<const GenericFunction* const> point_coefficients;
  /// Value of every named constant, in kernel order.
  std::span<const double> constants;
  /// Local facet of the cell ('+' and '-' for interior facets).
  std::array<int, 2> local_facet{-1, -1};
  /// Index of the vertex permutation mapping the '+' facet onto the '-'
  /// facet (see Kernel::facet_permutation).
  int permutation = 0;
  /// Optional mesh and cell index passed to point coefficients.
  const Mesh* mesh = nullptr;
  std::size_t cell = 0;
};

/// Compiled integral.
class Kernel
{
public:
  IntegralKind kind = IntegralKind::cell;
  int subdomain = -1;
  int rank = 0;
  cell::Type cell = cell::Type::triangle;
  int gdim = 2;
  int degree = 1;

  /// Elements of the argument slots, then of element coefficients.
  std::vector<std::shared_ptr<const FiniteElement>> elements;
  /// Indices into the form's coefficient list of the element and point
  /// coefficients this kernel reads.
  std::vector<int> coefficients;
  std::vector<int> point_coefficients;
  /// Indices into the form's constant list.
  std::vector<int> constants;

  /// Reference rule on the cell (or on the facet simplex).
  quadrature::Rule rule;
  /// tables[e][s]: element e tabulated with first derivatives at point
  /// set s (cell: one set; facets: one per local facet, and for interior
  /// facets one per (facet, permutation) of the '-' side after those).
  std::vector<std::vector<Tabulation>> tables;

  std::vector<Instruction> tape;
  std::int32_t output = 0;

  /// Local tensor shape (macro shape for interior facets).
  std::vector<int> shape() const;
  std::size_t size() const;

  /// A += element tensor (A is not zeroed). Throws DegenerateCell.
  void tabulate_tensor(std::span<double> A, const TabulateArgs& args) const;

  /// Human-readable listing of quadrature loop, tables and program.
  std::string pseudocode() const;

  /// Permutation index of the '-' facet vertex order relative to the '+'
  /// order: perm[k] is the position in the '-' facet of the k-th '+'
  /// facet vertex, indexed lexicographically.
  static int permutation_index(std::span<const int> perm);
  static int num_permutations(int tdim);

  /// Permutation index for two cells sharing a facet, found by matching
  /// vertex coordinates. `coordinates` holds the '+' cell then the '-'
  /// cell. Throws InvalidArgument if the facets do not coincide.
  static int facet_permutation(std::span<const double> coordinates,
                               cell::Type cell, int gdim,
                               std::array<int, 2> local_facet);
};

/// Compiled form: one kernel per (measure, subdomain).
struct CompiledForm
{
  int rank = 0;
  std::vector<std::shared_ptr<const FiniteElement>> arguments;
  std::vector<CoefficientInfo> coefficients;
  std::vector<ConstantInfo> constants;
  std::vector<Kernel> kernels;

  /// Index of the coefficient with the given name, or -1.
  int coefficient_index(const std::string& name) const;
  bool has_interior_facets() const;
};

struct CompileOptions
{
  /// Quadrature degree for every integral; -1 uses the estimate.
  int degree = -1;
  /// Cell and geometric dimension for forms without any element
  /// (e.g. 1*dx); -1 leaves them to be deduced.
  int tdim = -1;
  int gdim = -1;
};

/// Check and lower a form. Throws MixedRanks, UnsupportedExpression or
/// DegreeOutOfRange.
CompiledForm compile_form(const fl::Form& form, const CompileOptions& options = {});

/// Kernel IR as JSON text (schema "femkit-kir-1"), deterministic.
std::string to_ir(const CompiledForm& form);

/// Reload a compiled form from IR text. Throws SchemaMismatch or
/// ParseError.
CompiledForm from_ir(const std::string& text);

/// Pseudocode of all kernels.
std::string pseudocode(const CompiledForm& form);

} // namespace femkit
