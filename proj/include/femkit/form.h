// Copyright (c) 2026 femkit contributors
// SPDX-License-Identifier:    MIT

#pragma once

#include "element.h"
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

/// Form language: expression trees over arguments, coefficients and
/// geometric quantities, integrals and forms.
namespace femkit::fl
{

enum class Op
{
  argument,
  coefficient,
  constant,
  spatial_coordinate,
  facet_normal,
  cell_size,
  grad,
  div,
  inner,
  dot,
  sum,
  product,
  division,
  negation,
  power,
  call,
  indexed,
  restricted
};

enum class MathFunction
{
  sin,
  cos,
  exp,
  sqrt,
  abs
};

enum class Side
{
  none,
  plus,
  minus
};

struct Node;
using Expr = std::shared_ptr<const Node>;

/// Expression node. Values are flattened row-major; `shape` is {} for
/// scalars, {m} for vectors and {m, n} for matrices.
struct Node
{
  Op op = Op::constant;
  std::vector<Expr> operands;
  std::vector<int> shape;
  /// Geometric dimension if known from a terminal, else 0.
  int gdim = 0;

  /// constant value, power exponent
  double value = 0.0;
  /// argument slot (0 test, 1 trial), coefficient id, indexed component
  int index = 0;
  MathFunction fn = MathFunction::sin;
  Side side = Side::none;
  /// coefficient or named constant
  std::string name;

  /// Element of an argument or coefficient; null for point-evaluated
  /// coefficients.
  std::shared_ptr<const FiniteElement> element;
  /// First value component of the element used by this argument or
  /// coefficient (non-zero for pieces of mixed elements).
  int value_offset = 0;
  /// Polynomial degree used for quadrature estimation of terminals.
  int degree = 0;

  int value_size() const;
  bool is_scalar() const { return shape.empty(); }
};

// Terminals

/// Test (slot 0) or trial (slot 1) function on a whole element.
Expr argument(int slot, std::shared_ptr<const FiniteElement> element);

/// Pieces of an argument on a mixed element, one per sub-element.
std::vector<Expr> split_argument(int slot,
                                 std::shared_ptr<const FiniteElement> element);

/// Coefficient expanded in an element basis.
Expr coefficient(int id, const std::string& name,
                 std::shared_ptr<const FiniteElement> element);

/// Coefficient evaluated pointwise (an expression without element), of the
/// given value shape, declared degree and geometric dimension.
Expr point_coefficient(int id, const std::string& name, std::vector<int> shape,
                       int degree, int gdim);

/// Piece `i` of a coefficient on a mixed element.
Expr sub_coefficient(const Expr& coefficient, int i);

/// Literal constant; a non-empty name makes it a parameter whose value may
/// be overridden at assembly time.
Expr constant(double value, const std::string& name = "");

Expr spatial_coordinate(int gdim);
Expr facet_normal(int gdim);
Expr cell_size(int gdim);

// Operators. All throw ShapeMismatch for incompatible shapes.

Expr grad(const Expr& e);
Expr div(const Expr& e);
Expr inner(const Expr& a, const Expr& b);
Expr dot(const Expr& a, const Expr& b);
Expr sum(const Expr& a, const Expr& b);
Expr difference(const Expr& a, const Expr& b);
/// Scalar times anything, or matrix times vector.
Expr product(const Expr& a, const Expr& b);
Expr division(const Expr& a, const Expr& b);
Expr negation(const Expr& a);
Expr power(const Expr& base, double exponent);
Expr call(MathFunction fn, const Expr& a);
Expr indexed(const Expr& e, int component);
Expr restrict(const Expr& e, Side side);

/// v('+') n('+') + v('-') n('-') for scalar v, dot products for vector v.
Expr jump(const Expr& v, const Expr& n);
/// v('+') - v('-')
Expr jump(const Expr& v);
/// (v('+') + v('-')) / 2
Expr avg(const Expr& v);

enum class Measure
{
  cell,
  exterior_facet,
  interior_facet
};

std::string to_string(Measure m);

struct Integral
{
  Expr integrand;
  Measure measure = Measure::cell;
  /// Facet or cell marker this integral is restricted to; -1 for all.
  int subdomain = -1;
};

/// Sum of integrals.
class Form
{
public:
  Form() = default;
  explicit Form(std::vector<Integral> integrals)
      : _integrals(std::move(integrals))
  {
  }

  const std::vector<Integral>& integrals() const { return _integrals; }
  bool empty() const { return _integrals.empty(); }

  /// Number of distinct argument slots.
  int rank() const;

  /// Argument terminal (whole element) per slot, indexed by slot.
  std::vector<Expr> arguments() const;

  /// Coefficient terminals (whole coefficients), sorted by id.
  std::vector<Expr> coefficients() const;

  /// Named constants used in the form, sorted by name.
  std::vector<std::string> constants() const;

  bool has_measure(Measure m) const;

private:
  std::vector<Integral> _integrals;
};

/// Integrate a scalar expression. Interior-facet integrands must restrict
/// every argument, coefficient and geometric quantity
/// (UnrestrictedInteriorFacet); other measures must not use restrictions.
Form integrate(const Expr& integrand, Measure measure, int subdomain = -1);

Form operator+(const Form& a, const Form& b);
Form operator-(const Form& a, const Form& b);
Form operator-(const Form& a);
/// Scale every integrand by a scalar expression.
Form operator*(const Expr& s, const Form& f);

/// Text of an expression. Operands of commutative operations are kept in
/// construction order.
std::string to_string(const Expr& e);
std::string to_string(const Form& f);

/// Distribute products over sums so the result is a sum of monomials.
/// Non-linear positions (function arguments, powers, denominators) are
/// left unexpanded.
std::vector<Expr> expand(const Expr& e);

/// Bilinear part: all monomials containing the trial function. Throws
/// NonlinearInTrial or EmptyBilinear.
Form lhs(const Form& F);

/// Linear part: the negated monomials without the trial function.
Form rhs(const Form& F);

/// Gateaux derivative of F in the direction of a new trial function on
/// the element of coefficient u. Throws UnsupportedNode for abs and for
/// non-integer powers depending on u.
Form derivative(const Form& F, const Expr& u);

/// Same with an explicit trial function du.
Form derivative(const Form& F, const Expr& u, const Expr& du);

/// Replace coefficient `id` by an expression (shape must match).
Expr replace(const Expr& e, int id, const Expr& by);
Form replace(const Form& f, int id, const Expr& by);

/// True if swapping test and trial functions leaves the multiset of
/// monomials unchanged.
bool is_symmetric(const Form& a);

/// Estimated polynomial degree of an expression.
int estimate_degree(const Expr& e);

struct FormMetadata
{
  int rank = 0;
  std::vector<Expr> arguments;
  std::vector<Expr> coefficients;
  std::vector<std::string> constants;
  /// Quadrature degree per integral, clamped to [1, 20].
  std::vector<int> degrees;
};

/// Check argument consistency (MixedRanks) and compute metadata.
FormMetadata check_form(const Form& form);

/// Throw MixedRanks unless every monomial uses all argument slots of the
/// form (a residual like v*(u - f)*dx must be split with lhs/rhs first).
void check_arity(const Form& form);

/// True if expression e depends on an argument of the given slot.
bool depends_on_argument(const Expr& e, int slot);

/// True if expression e depends on coefficient id.
bool depends_on_coefficient(const Expr& e, int id);

} // namespace femkit::fl
