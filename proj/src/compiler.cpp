// Copyright (c) 2026 femkit contributors
// SPDX-License-Identifier:    MIT

#include <femkit/compiler.h>
#include <femkit/error.h>
#include <femkit/mesh.h>

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <functional>
#include <map>
#include <sstream>
#include <tuple>

using namespace femkit;
using fl::Expr;
using fl::Op;

namespace
{
using Reg = std::int32_t;

struct Dual
{
  Reg v = 0;
  std::array<Reg, 3> d{0, 0, 0};
};
using Comps = std::vector<Dual>;

std::vector<std::vector<int>> permutations(int n)
{
  std::vector<int> p(n);
  for (int i = 0; i < n; ++i)
    p[i] = i;
  std::vector<std::vector<int>> out;
  do
    out.push_back(p);
  while (std::next_permutation(p.begin(), p.end()));
  return out;
}

// Builds the tape for one kernel.
class Lowering
{
public:
  Lowering(Kernel& k, const CompiledForm& form, IntegralKind kind)
      : _k(k), _form(form), _kind(kind)
  {
    _zero = constant(0.0);
    _one = constant(1.0);
  }

  Reg lower_integrand(const Expr& e)
  {
    auto c = lower(e, 0, false);
    return c.at(0).v;
  }

  // keep only instructions reachable from the output
  void prune()
  {
    auto& t = _k.tape;
    std::vector<char> live(t.size(), 0);
    live[_k.output] = 1;
    for (std::size_t r = t.size(); r-- > 0;)
    {
      if (!live[r])
        continue;
      if (t[r].a >= 0)
        live[t[r].a] = 1;
      if (t[r].b >= 0)
        live[t[r].b] = 1;
    }
    std::vector<Reg> map(t.size(), -1);
    std::vector<Instruction> out;
    for (std::size_t r = 0; r < t.size(); ++r)
    {
      if (!live[r])
        continue;
      Instruction in = t[r];
      if (in.a >= 0)
        in.a = map[in.a];
      if (in.b >= 0)
        in.b = map[in.b];
      map[r] = static_cast<Reg>(out.size());
      out.push_back(in);
    }
    _k.output = map[_k.output];
    t = std::move(out);
  }

private:
  Kernel& _k;
  const CompiledForm& _form;
  IntegralKind _kind;
  Reg _zero = 0, _one = 0;
  std::map<std::tuple<int, Reg, Reg, std::uint64_t, std::array<std::int32_t, 4>>, Reg> _cse;
  std::map<std::tuple<const fl::Node*, int, bool>, Comps> _memo;

  int gdim() const { return _k.gdim; }

  Reg emit(Instruction in)
  {
    if (in.a >= 0)
      in.level |= _k.tape[in.a].level;
    if (in.b >= 0)
      in.level |= _k.tape[in.b].level;
    std::uint64_t bits;
    std::memcpy(&bits, &in.value, sizeof(bits));
    auto key = std::make_tuple(static_cast<int>(in.op), in.a, in.b, bits, in.ints);
    auto it = _cse.find(key);
    if (it != _cse.end())
      return it->second;
    const Reg r = static_cast<Reg>(_k.tape.size());
    _k.tape.push_back(in);
    _cse.emplace(key, r);
    return r;
  }

  bool is_const(Reg r) const { return _k.tape[r].op == Instruction::constant; }
  double cval(Reg r) const { return _k.tape[r].value; }

  Reg constant(double v)
  {
    Instruction in;
    in.op = Instruction::constant;
    in.value = v == 0.0 ? 0.0 : v; // no negative zero
    return emit(in);
  }

  Reg unary(Instruction::Op op, Reg a, double value = 0.0)
  {
    if (is_const(a))
    {
      const double x = cval(a);
      switch (op)
      {
      case Instruction::neg: return constant(-x);
      case Instruction::sin: return constant(std::sin(x));
      case Instruction::cos: return constant(std::cos(x));
      case Instruction::exp: return constant(std::exp(x));
      case Instruction::sqrt: return constant(std::sqrt(x));
      case Instruction::abs: return constant(std::abs(x));
      case Instruction::sign: return constant(x > 0 ? 1.0 : x < 0 ? -1.0 : 0.0);
      case Instruction::pow: return constant(std::pow(x, value));
      default: break;
      }
    }
    if (op == Instruction::neg and _k.tape[a].op == Instruction::neg)
      return _k.tape[a].a;
    if (op == Instruction::pow)
    {
      if (value == 0.0)
        return _one;
      if (value == 1.0)
        return a;
      if (value == 2.0)
        return mul(a, a);
    }
    Instruction in;
    in.op = op;
    in.a = a;
    in.value = value;
    return emit(in);
  }

  Reg binary(Instruction::Op op, Reg a, Reg b)
  {
    Instruction in;
    in.op = op;
    if ((op == Instruction::add or op == Instruction::mul) and b < a)
      std::swap(a, b);
    in.a = a;
    in.b = b;
    return emit(in);
  }

  Reg add(Reg a, Reg b)
  {
    if (a == _zero)
      return b;
    if (b == _zero)
      return a;
    if (is_const(a) and is_const(b))
      return constant(cval(a) + cval(b));
    if (_k.tape[b].op == Instruction::neg)
      return sub(a, _k.tape[b].a);
    if (_k.tape[a].op == Instruction::neg)
      return sub(b, _k.tape[a].a);
    return binary(Instruction::add, a, b);
  }

  Reg sub(Reg a, Reg b)
  {
    if (b == _zero)
      return a;
    if (a == _zero)
      return unary(Instruction::neg, b);
    if (a == b)
      return _zero;
    if (is_const(a) and is_const(b))
      return constant(cval(a) - cval(b));
    return binary(Instruction::sub, a, b);
  }

  Reg mul(Reg a, Reg b)
  {
    if (a == _zero or b == _zero)
      return _zero;
    if (a == _one)
      return b;
    if (b == _one)
      return a;
    if (is_const(a) and is_const(b))
      return constant(cval(a) * cval(b));
    if (is_const(a) and cval(a) == -1.0)
      return unary(Instruction::neg, b);
    if (is_const(b) and cval(b) == -1.0)
      return unary(Instruction::neg, a);
    return binary(Instruction::mul, a, b);
  }

  Reg div(Reg a, Reg b)
  {
    if (a == _zero)
      return _zero;
    if (b == _one)
      return a;
    if (is_const(a) and is_const(b))
      return constant(cval(a) / cval(b));
    return binary(Instruction::div, a, b);
  }

  // -- dual arithmetic -----------------------------------------------------

  Dual zero_dual() const { return Dual{_zero, {_zero, _zero, _zero}}; }

  Dual dconst(Reg v) const { return Dual{v, {_zero, _zero, _zero}}; }

  Dual dadd(const Dual& a, const Dual& b, bool nd)
  {
    Dual r = dconst(add(a.v, b.v));
    if (nd)
      for (int k = 0; k < gdim(); ++k)
        r.d[k] = add(a.d[k], b.d[k]);
    return r;
  }

  Dual dneg(const Dual& a, bool nd)
  {
    Dual r = dconst(unary(Instruction::neg, a.v));
    if (nd)
      for (int k = 0; k < gdim(); ++k)
        r.d[k] = unary(Instruction::neg, a.d[k]);
    return r;
  }

  Dual dmul(const Dual& a, const Dual& b, bool nd)
  {
    Dual r = dconst(mul(a.v, b.v));
    if (nd)
      for (int k = 0; k < gdim(); ++k)
        r.d[k] = add(mul(a.d[k], b.v), mul(a.v, b.d[k]));
    return r;
  }

  Dual ddiv(const Dual& a, const Dual& b, bool nd)
  {
    Dual r = dconst(div(a.v, b.v));
    if (nd)
    {
      for (int k = 0; k < gdim(); ++k)
      {
        const Reg num = sub(mul(a.d[k], b.v), mul(a.v, b.d[k]));
        r.d[k] = div(num, mul(b.v, b.v));
      }
    }
    return r;
  }

  Dual dpow(const Dual& a, double p, bool nd)
  {
    Dual r = dconst(unary(Instruction::pow, a.v, p));
    if (nd)
    {
      const Reg f = mul(constant(p), unary(Instruction::pow, a.v, p - 1.0));
      for (int k = 0; k < gdim(); ++k)
        r.d[k] = mul(f, a.d[k]);
    }
    return r;
  }

  Dual dcall(fl::MathFunction fn, const Dual& a, bool nd)
  {
    Reg v = 0, f = 0;
    switch (fn)
    {
    case fl::MathFunction::sin:
      v = unary(Instruction::sin, a.v);
      if (nd)
        f = unary(Instruction::cos, a.v);
      break;
    case fl::MathFunction::cos:
      v = unary(Instruction::cos, a.v);
      if (nd)
        f = unary(Instruction::neg, unary(Instruction::sin, a.v));
      break;
    case fl::MathFunction::exp:
      v = unary(Instruction::exp, a.v);
      f = v;
      break;
    case fl::MathFunction::sqrt:
      v = unary(Instruction::sqrt, a.v);
      if (nd)
        f = div(_one, mul(constant(2.0), v));
      break;
    case fl::MathFunction::abs:
      v = unary(Instruction::abs, a.v);
      if (nd)
        f = unary(Instruction::sign, a.v);
      break;
    }
    Dual r = dconst(v);
    if (nd)
      for (int k = 0; k < gdim(); ++k)
        r.d[k] = mul(f, a.d[k]);
    return r;
  }

  // -- terminals -----------------------------------------------------------

  int coefficient_slot(const Expr& e)
  {
    int fi = -1;
    for (std::size_t i = 0; i < _form.coefficients.size(); ++i)
      if (_form.coefficients[i].id == e->index)
        fi = static_cast<int>(i);
    if (fi < 0)
      throw Error(ErrorKind::InvalidArgument, "coefficient '" + e->name + "' not in form");
    auto& list = e->element ? _k.coefficients : _k.point_coefficients;
    for (std::size_t i = 0; i < list.size(); ++i)
      if (list[i] == fi)
        return static_cast<int>(i);
    list.push_back(fi);
    if (e->element)
      _k.elements.push_back(_form.coefficients[fi].element);
    return static_cast<int>(list.size()) - 1;
  }

  int constant_slot(const std::string& name)
  {
    int fi = -1;
    for (std::size_t i = 0; i < _form.constants.size(); ++i)
      if (_form.constants[i].name == name)
        fi = static_cast<int>(i);
    for (std::size_t i = 0; i < _k.constants.size(); ++i)
      if (_k.constants[i] == fi)
        return static_cast<int>(i);
    _k.constants.push_back(fi);
    return static_cast<int>(_k.constants.size()) - 1;
  }

  Comps terminal(const Expr& e, int side, bool nd)
  {
    Comps out;
    const int n = e->value_size();
    switch (e->op)
    {
    case Op::argument:
    {
      for (int j = 0; j < n; ++j)
      {
        Instruction in;
        in.op = Instruction::argument;
        in.level = e->index == 0 ? 1 : 2;
        in.ints = {e->index, side, e->value_offset + j, -1};
        Dual d = dconst(emit(in));
        if (nd)
        {
          for (int k = 0; k < gdim(); ++k)
          {
            in.ints[3] = k;
            d.d[k] = emit(in);
          }
        }
        out.push_back(d);
      }
      return out;
    }
    case Op::coefficient:
    {
      const int slot = coefficient_slot(e);
      for (int j = 0; j < n; ++j)
      {
        Instruction in;
        if (!e->element)
        {
          if (nd)
          {
            throw Error(ErrorKind::UnsupportedExpression,
                        "derivative of point-evaluated coefficient '" + e->name
                            + "'");
          }
          in.op = Instruction::point_coefficient;
          in.ints = {slot, j, 0, -1};
          out.push_back(dconst(emit(in)));
          continue;
        }
        in.op = Instruction::coefficient;
        in.ints = {slot, side, e->value_offset + j, -1};
        Dual d = dconst(emit(in));
        if (nd)
        {
          for (int k = 0; k < gdim(); ++k)
          {
            in.ints[3] = k;
            d.d[k] = emit(in);
          }
        }
        out.push_back(d);
      }
      return out;
    }
    case Op::constant:
    {
      if (e->name.empty())
        return {dconst(constant(e->value))};
      Instruction in;
      in.op = Instruction::param;
      in.ints = {constant_slot(e->name), 0, 0, -1};
      return {dconst(emit(in))};
    }
    case Op::spatial_coordinate:
    {
      for (int k = 0; k < n; ++k)
      {
        Instruction in;
        in.op = Instruction::coordinate;
        in.ints = {k, 0, 0, -1};
        Dual d = dconst(emit(in));
        if (nd)
          d.d[k] = _one;
        out.push_back(d);
      }
      return out;
    }
    case Op::facet_normal:
    {
      if (_kind == IntegralKind::cell)
        throw Error(ErrorKind::UnsupportedExpression, "facet normal in a cell integral");
      for (int k = 0; k < n; ++k)
      {
        Instruction in;
        in.op = Instruction::normal;
        in.ints = {k, side, 0, -1};
        out.push_back(dconst(emit(in)));
      }
      return out;
    }
    case Op::cell_size:
    {
      Instruction in;
      in.op = Instruction::cell_size;
      in.ints = {side, 0, 0, -1};
      return {dconst(emit(in))};
    }
    default: break;
    }
    throw Error(ErrorKind::UnsupportedExpression, "unexpected terminal");
  }

  Comps lower(const Expr& e, int side, bool nd)
  {
    auto key = std::make_tuple(e.get(), side, nd);
    auto it = _memo.find(key);
    if (it != _memo.end())
      return it->second;
    Comps r = lower_uncached(e, side, nd);
    _memo.emplace(key, r);
    return r;
  }

  Comps lower_uncached(const Expr& e, int side, bool nd)
  {
    const auto& o = e->operands;
    switch (e->op)
    {
    case Op::argument:
    case Op::coefficient:
    case Op::constant:
    case Op::spatial_coordinate:
    case Op::facet_normal:
    case Op::cell_size: return terminal(e, side, nd);
    case Op::grad:
    {
      if (nd)
      {
        throw Error(ErrorKind::UnsupportedExpression,
                    "second derivatives are not supported");
      }
      const Comps a = lower(o[0], side, true);
      Comps out;
      for (const auto& c : a)
        for (int k = 0; k < gdim(); ++k)
          out.push_back(dconst(c.d[k]));
      return out;
    }
    case Op::div:
    {
      if (nd)
      {
        throw Error(ErrorKind::UnsupportedExpression,
                    "second derivatives are not supported");
      }
      const Comps a = lower(o[0], side, true);
      const int g = gdim();
      Comps out;
      for (std::size_t p = 0; p < a.size() / g; ++p)
      {
        Reg s = _zero;
        for (int k = 0; k < g; ++k)
          s = add(s, a[p * g + k].d[k]);
        out.push_back(dconst(s));
      }
      return out;
    }
    case Op::inner:
    {
      const Comps a = lower(o[0], side, nd), b = lower(o[1], side, nd);
      Dual s = zero_dual();
      for (std::size_t i = 0; i < a.size(); ++i)
        s = dadd(s, dmul(a[i], b[i], nd), nd);
      return {s};
    }
    case Op::dot:
    {
      const Comps a = lower(o[0], side, nd), b = lower(o[1], side, nd);
      const std::size_t m = o[0]->shape.back();
      const std::size_t na = a.size() / m, nb = b.size() / m;
      Comps out;
      for (std::size_t p = 0; p < na; ++p)
      {
        for (std::size_t r = 0; r < nb; ++r)
        {
          Dual s = zero_dual();
          for (std::size_t l = 0; l < m; ++l)
            s = dadd(s, dmul(a[p * m + l], b[l * nb + r], nd), nd);
          out.push_back(s);
        }
      }
      return out;
    }
    case Op::sum:
    {
      const Comps a = lower(o[0], side, nd), b = lower(o[1], side, nd);
      Comps out;
      for (std::size_t i = 0; i < a.size(); ++i)
        out.push_back(dadd(a[i], b[i], nd));
      return out;
    }
    case Op::product:
    {
      const Comps a = lower(o[0], side, nd), b = lower(o[1], side, nd);
      Comps out;
      if (o[0]->is_scalar())
        for (const auto& c : b)
          out.push_back(dmul(a[0], c, nd));
      else
        for (const auto& c : a)
          out.push_back(dmul(c, b[0], nd));
      return out;
    }
    case Op::division:
    {
      const Comps a = lower(o[0], side, nd), b = lower(o[1], side, nd);
      Comps out;
      for (const auto& c : a)
        out.push_back(ddiv(c, b[0], nd));
      return out;
    }
    case Op::negation:
    {
      Comps out;
      for (const auto& c : lower(o[0], side, nd))
        out.push_back(dneg(c, nd));
      return out;
    }
    case Op::power: return {dpow(lower(o[0], side, nd)[0], e->value, nd)};
    case Op::call: return {dcall(e->fn, lower(o[0], side, nd)[0], nd)};
    case Op::indexed:
    {
      const Comps a = lower(o[0], side, nd);
      const std::size_t stride = a.size() / o[0]->shape[0];
      return Comps(a.begin() + static_cast<std::ptrdiff_t>(e->index * stride),
                   a.begin() + static_cast<std::ptrdiff_t>((e->index + 1) * stride));
    }
    case Op::restricted:
      return lower(o[0], e->side == fl::Side::minus ? 1 : 0, nd);
    }
    throw Error(ErrorKind::UnsupportedExpression, "unexpected node");
  }
};

// Reference points of a facet rule on local facet f of the cell; `perm`
// reorders the facet vertices.
std::vector<double> facet_points(cell::Type ct, const quadrature::Rule& rule,
                                 int f, const std::vector<int>& perm)
{
  const int tdim = cell::topological_dimension(ct);
  const auto& verts = cell::sub_entity_vertices(ct, tdim - 1)[f];
  const auto ref = cell::reference_vertices(ct);
  std::vector<double> X(rule.size() * tdim, 0.0);
  for (std::size_t q = 0; q < rule.size(); ++q)
  {
    std::vector<double> lam(tdim);
    double s = 0.0;
    for (int j = 0; j < tdim - 1; ++j)
    {
      lam[j + 1] = rule.point(q)[j];
      s += lam[j + 1];
    }
    lam[0] = 1.0 - s;
    for (int m = 0; m < tdim; ++m)
      for (int k = 0; k < tdim; ++k)
        X[q * tdim + k] += lam[m] * ref[verts[perm[m]]][k];
  }
  return X;
}

void build_tables(Kernel& k)
{
  const int tdim = cell::topological_dimension(k.cell);
  std::vector<std::vector<double>> sets;
  if (k.kind == IntegralKind::cell)
    sets.push_back(k.rule.points);
  else
  {
    const int nf = tdim + 1;
    std::vector<int> id(tdim);
    for (int i = 0; i < tdim; ++i)
      id[i] = i;
    for (int f = 0; f < nf; ++f)
      sets.push_back(facet_points(k.cell, k.rule, f, id));
    if (k.kind == IntegralKind::interior_facet)
      for (int f = 0; f < nf; ++f)
        for (const auto& p : permutations(tdim))
          sets.push_back(facet_points(k.cell, k.rule, f, p));
  }
  k.tables.clear();
  for (const auto& e : k.elements)
  {
    std::vector<Tabulation> t;
    for (const auto& pts : sets)
      t.push_back(e->tabulate_unchecked(1, pts));
    k.tables.push_back(std::move(t));
  }
}

std::string family_name(Family f)
{
  switch (f)
  {
  case Family::CG: return "CG";
  case Family::DG: return "DG";
  case Family::CR: return "CR";
  case Family::Vector: return "Vector";
  default: return "Mixed";
  }
}
} // namespace

//-----------------------------------------------------------------------------
std::string femkit::to_string(IntegralKind kind)
{
  switch (kind)
  {
  case IntegralKind::cell: return "cell";
  case IntegralKind::exterior_facet: return "exterior_facet";
  default: return "interior_facet";
  }
}
//-----------------------------------------------------------------------------
const char* femkit::to_string(Instruction::Op op)
{
  static const char* names[]
      = {"const", "param", "x", "arg", "coef", "pcoef", "n",
         "h", "neg", "add", "sub", "mul", "div", "pow",
         "sin", "cos", "exp", "sqrt", "abs", "sign"};
  return names[op];
}
//-----------------------------------------------------------------------------
int Kernel::num_permutations(int tdim)
{
  int n = 1;
  for (int i = 2; i <= tdim; ++i)
    n *= i;
  return n;
}
//-----------------------------------------------------------------------------
int Kernel::permutation_index(std::span<const int> perm)
{
  const auto all = permutations(static_cast<int>(perm.size()));
  for (std::size_t i = 0; i < all.size(); ++i)
    if (std::equal(all[i].begin(), all[i].end(), perm.begin()))
      return static_cast<int>(i);
  throw Error(ErrorKind::InvalidArgument, "not a permutation");
}
//-----------------------------------------------------------------------------
int Kernel::facet_permutation(std::span<const double> coordinates,
                              cell::Type ct, int gdim,
                              std::array<int, 2> local_facet)
{
  const int tdim = cell::topological_dimension(ct);
  const int nv = tdim + 1;
  const auto& fv = cell::sub_entity_vertices(ct, tdim - 1);
  const auto& v0 = fv.at(local_facet[0]);
  const auto& v1 = fv.at(local_facet[1]);
  std::vector<int> perm(tdim, -1);
  for (int k = 0; k < tdim; ++k)
  {
    const double* a = coordinates.data() + v0[k] * gdim;
    for (int m = 0; m < tdim; ++m)
    {
      const double* b = coordinates.data() + (nv + v1[m]) * gdim;
      double d = 0.0;
      for (int l = 0; l < gdim; ++l)
        d = std::max(d, std::abs(a[l] - b[l]));
      if (d < 1e-10)
        perm[k] = m;
    }
    if (perm[k] < 0)
      throw Error(ErrorKind::InvalidArgument, "cells do not share the facet");
  }
  return permutation_index(perm);
}
//-----------------------------------------------------------------------------
std::vector<int> Kernel::shape() const
{
  const int m = kind == IntegralKind::interior_facet ? 2 : 1;
  std::vector<int> s;
  for (int r = 0; r < rank; ++r)
    s.push_back(m * elements[r]->space_dim());
  return s;
}
//-----------------------------------------------------------------------------
std::size_t Kernel::size() const
{
  std::size_t n = 1;
  for (int s : shape())
    n *= static_cast<std::size_t>(s);
  return n;
}
//-----------------------------------------------------------------------------
void Kernel::tabulate_tensor(std::span<double> A, const TabulateArgs& args) const
{
  const int tdim = cell::topological_dimension(cell);
  const int nv = tdim + 1;
  const bool interior = kind == IntegralKind::interior_facet;
  const int nsides = interior ? 2 : 1;

  if (args.coordinates.size() < static_cast<std::size_t>(nsides * nv * gdim))
    throw Error(ErrorKind::ShapeMismatch, "too few cell coordinates");

  std::array<CellGeometry, 2> geo;
  for (int s = 0; s < nsides; ++s)
    geo[s] = cell_geometry(args.coordinates.subspan(s * nv * gdim, nv * gdim),
                           tdim, gdim);

  // point sets and integration scaling
  std::array<int, 2> ps{0, 0};
  double scale = std::abs(geo[0].detJ);
  std::array<double, 3> normal{};
  if (kind != IntegralKind::cell)
  {
    const int lf = args.local_facet[0];
    if (lf < 0 or lf > tdim)
      throw Error(ErrorKind::IndexOutOfRange, "local facet " + std::to_string(lf));
    ps[0] = lf;
    const auto fg = facet_geometry(args.coordinates.subspan(0, nv * gdim), tdim,
                                   gdim, lf);
    normal = fg.normal;
    scale = tdim == 1 ? 1.0
                      : fg.area / cell::reference_volume(cell::simplex(tdim - 1));
    if (interior)
    {
      const int lf1 = args.local_facet[1];
      if (lf1 < 0 or lf1 > tdim)
        throw Error(ErrorKind::IndexOutOfRange, "local facet " + std::to_string(lf1));
      ps[1] = (tdim + 1) + lf1 * num_permutations(tdim) + args.permutation;
    }
  }

  // argument sizes
  std::array<int, 2> ndofs{1, 1}, N{1, 1};
  for (int r = 0; r < rank; ++r)
  {
    ndofs[r] = elements[r]->space_dim();
    N[r] = ndofs[r] * nsides;
  }
  if (A.size() < static_cast<std::size_t>(N[0]) * (rank == 2 ? N[1] : 1))
    throw Error(ErrorKind::ShapeMismatch, "element tensor too small");

  // coefficient blocks
  std::vector<std::size_t> coef_offset(coefficients.size());
  std::size_t off = 0;
  for (std::size_t c = 0; c < coefficients.size(); ++c)
  {
    coef_offset[c] = off;
    off += static_cast<std::size_t>(elements[rank + c]->space_dim()) * nsides;
  }
  if (args.coefficients.size() < off)
    throw Error(ErrorKind::ShapeMismatch, "too few coefficient values");
  if (args.point_coefficients.size() < point_coefficients.size())
    throw Error(ErrorKind::ShapeMismatch, "too few point coefficients");
  if (args.constants.size() < constants.size())
    throw Error(ErrorKind::ShapeMismatch, "too few constants");

  std::vector<int> pc_offset(point_coefficients.size() + 1, 0);
  for (std::size_t p = 0; p < point_coefficients.size(); ++p)
    pc_offset[p + 1] = pc_offset[p] + args.point_coefficients[p]->value_size();
  std::vector<double> pvals(pc_offset.back());

  const std::size_t nt = tape.size();
  std::vector<double> R0(nt), R3(nt);
  std::vector<double> R1(rank >= 1 ? static_cast<std::size_t>(N[0]) * nt : 0);
  std::vector<double> R2(rank >= 2 ? static_cast<std::size_t>(N[1]) * nt : 0);
  std::array<std::vector<Reg>, 4> lists;
  for (std::size_t r = 0; r < nt; ++r)
    lists[tape[r].level].push_back(static_cast<Reg>(r));

  // physical derivative of a tabulated function
  auto deriv = [&](const Tabulation& T, std::size_t q, int i, int c, int d,
                   int side) -> double
  {
    if (d < 0)
      return T(0, q, i, c);
    double v = 0.0;
    for (int l = 0; l < tdim; ++l)
      v += geo[side].K[l * gdim + d] * T(1 + l, q, i, c);
    return v;
  };

  const auto& cell_tables = tables;
  std::size_t q = 0;
  int cur_i = 0, cur_j = 0;
  auto get = [&](Reg r) -> double
  {
    switch (tape[r].level)
    {
    case 0: return R0[r];
    case 1: return R1[static_cast<std::size_t>(cur_i) * nt + r];
    case 2: return R2[static_cast<std::size_t>(cur_j) * nt + r];
    default: return R3[r];
    }
  };

  std::array<double, 3> xq{};
  auto eval = [&](Reg r) -> double
  {
    const Instruction& in = tape[r];
    switch (in.op)
    {
    case Instruction::constant: return in.value;
    case Instruction::param: return args.constants[in.ints[0]];
    case Instruction::coordinate: return xq[in.ints[0]];
    case Instruction::argument:
    {
      const int slot = in.ints[0], side = in.ints[1];
      int i = slot == 0 ? cur_i : cur_j;
      if (interior)
      {
        if ((side == 0) != (i < ndofs[slot]))
          return 0.0;
        if (side == 1)
          i -= ndofs[slot];
      }
      return deriv(cell_tables[slot][ps[side]], q, i, in.ints[2], in.ints[3], side);
    }
    case Instruction::coefficient:
    {
      const int k = in.ints[0], side = in.ints[1];
      const int n = elements[rank + k]->space_dim();
      const double* w = args.coefficients.data() + coef_offset[k]
                        + static_cast<std::size_t>(side) * n;
      const auto& T = cell_tables[rank + k][ps[side]];
      double v = 0.0;
      for (int i = 0; i < n; ++i)
        v += w[i] * deriv(T, q, i, in.ints[2], in.ints[3], side);
      return v;
    }
    case Instruction::point_coefficient:
      return pvals[pc_offset[in.ints[0]] + in.ints[1]];
    case Instruction::normal:
      return in.ints[1] == 1 ? -normal[in.ints[0]] : normal[in.ints[0]];
    case Instruction::cell_size: return geo[in.ints[0]].h;
    case Instruction::neg: return -get(in.a);
    case Instruction::add: return get(in.a) + get(in.b);
    case Instruction::sub: return get(in.a) - get(in.b);
    case Instruction::mul: return get(in.a) * get(in.b);
    case Instruction::div: return get(in.a) / get(in.b);
    case Instruction::pow: return std::pow(get(in.a), in.value);
    case Instruction::sin: return std::sin(get(in.a));
    case Instruction::cos: return std::cos(get(in.a));
    case Instruction::exp: return std::exp(get(in.a));
    case Instruction::sqrt: return std::sqrt(get(in.a));
    case Instruction::abs: return std::abs(get(in.a));
    case Instruction::sign:
    {
      const double x = get(in.a);
      return x > 0 ? 1.0 : x < 0 ? -1.0 : 0.0;
    }
    }
    return 0.0;
  };

  const std::size_t nq = rule.size();
  // reference points of the '+' side for the physical point
  std::vector<double> ref_points;
  if (kind == IntegralKind::cell)
    ref_points = rule.points;
  else
  {
    std::vector<int> id(tdim);
    for (int i = 0; i < tdim; ++i)
      id[i] = i;
    ref_points = facet_points(cell, rule, ps[0], id);
  }

  const Reg out = output;
  for (q = 0; q < nq; ++q)
  {
    for (int k = 0; k < gdim; ++k)
    {
      double v = geo[0].x0[k];
      for (int l = 0; l < tdim; ++l)
        v += geo[0].J[k * tdim + l] * ref_points[q * tdim + l];
      xq[k] = v;
    }
    for (std::size_t p = 0; p < point_coefficients.size(); ++p)
    {
      std::span<double> dst(pvals.data() + pc_offset[p],
                            static_cast<std::size_t>(pc_offset[p + 1] - pc_offset[p]));
      if (args.mesh)
        args.point_coefficients[p]->eval_cell({xq.data(), static_cast<std::size_t>(gdim)},
                                              *args.mesh, args.cell, dst);
      else
        args.point_coefficients[p]->eval({xq.data(), static_cast<std::size_t>(gdim)}, dst);
    }
    const double W = rule.weights[q] * scale;

    for (Reg r : lists[0])
      R0[r] = eval(r);
    if (rank == 0)
    {
      A[0] += W * get(out);
      continue;
    }
    for (cur_i = 0; cur_i < N[0]; ++cur_i)
      for (Reg r : lists[1])
        R1[static_cast<std::size_t>(cur_i) * nt + r] = eval(r);
    if (rank == 1)
    {
      for (cur_i = 0; cur_i < N[0]; ++cur_i)
        A[cur_i] += W * get(out);
      continue;
    }
    for (cur_j = 0; cur_j < N[1]; ++cur_j)
      for (Reg r : lists[2])
        R2[static_cast<std::size_t>(cur_j) * nt + r] = eval(r);
    for (cur_i = 0; cur_i < N[0]; ++cur_i)
    {
      for (cur_j = 0; cur_j < N[1]; ++cur_j)
      {
        for (Reg r : lists[3])
          R3[r] = eval(r);
        A[static_cast<std::size_t>(cur_i) * N[1] + cur_j] += W * get(out);
      }
    }
  }
}
//-----------------------------------------------------------------------------
std::string Kernel::pseudocode() const
{
  std::ostringstream s;
  s.precision(17);
  const auto sh = shape();
  s << "kernel " << to_string(kind) << "_integral";
  if (subdomain >= 0)
    s << "(" << subdomain << ")";
  s << ": rank " << rank << ", cell " << cell::to_string(cell) << ", shape [";
  for (std::size_t i = 0; i < sh.size(); ++i)
    s << (i ? ", " : "") << sh[i];
  s << "]\n";
  s << "  quadrature: degree " << degree << ", " << rule.size() << " points\n";
  for (std::size_t e = 0; e < elements.size(); ++e)
  {
    s << "  table T" << e << ": " << elements[e]->descriptor().str() << ", "
      << elements[e]->space_dim() << " dofs, " << tables[e].size()
      << " point set(s)";
    if (static_cast<int>(e) < rank)
      s << " [argument " << e << "]";
    else
      s << " [coefficient w" << e - rank << "]";
    s << "\n";
  }
  auto operand = [&](Reg r) { return "r" + std::to_string(r); };
  auto line = [&](Reg r)
  {
    const Instruction& in = tape[r];
    std::ostringstream l;
    l.precision(17);
    l << "r" << r << " = ";
    const char* side = in.ints[1] == 1 ? "-" : "+";
    switch (in.op)
    {
    case Instruction::constant: l << in.value; break;
    case Instruction::param: l << "c[" << in.ints[0] << "]"; break;
    case Instruction::coordinate: l << "x[" << in.ints[0] << "]"; break;
    case Instruction::argument:
      l << "T" << in.ints[0] << side << "[q][" << (in.ints[0] == 0 ? "i" : "j")
        << "][" << in.ints[2] << "]";
      if (in.ints[3] >= 0)
        l << ".d/dx" << in.ints[3];
      break;
    case Instruction::coefficient:
      l << "sum_k w" << in.ints[0] << side << "[k] * T" << rank + in.ints[0]
        << side << "[q][k][" << in.ints[2] << "]";
      if (in.ints[3] >= 0)
        l << ".d/dx" << in.ints[3];
      break;
    case Instruction::point_coefficient:
      l << "f" << in.ints[0] << "(x)[" << in.ints[1] << "]";
      break;
    case Instruction::normal: l << "n" << side << "[" << in.ints[0] << "]"; break;
    case Instruction::cell_size: l << "h" << side; break;
    case Instruction::neg: l << "-" << operand(in.a); break;
    case Instruction::add: l << operand(in.a) << " + " << operand(in.b); break;
    case Instruction::sub: l << operand(in.a) << " - " << operand(in.b); break;
    case Instruction::mul: l << operand(in.a) << " * " << operand(in.b); break;
    case Instruction::div: l << operand(in.a) << " / " << operand(in.b); break;
    case Instruction::pow: l << operand(in.a) << " ^ " << in.value; break;
    default: l << femkit::to_string(in.op) << "(" << operand(in.a) << ")"; break;
    }
    return l.str();
  };
  auto block = [&](int level, const std::string& indent)
  {
    for (std::size_t r = 0; r < tape.size(); ++r)
      if (tape[r].level == level)
        s << indent << line(static_cast<Reg>(r)) << "\n";
  };
  s << "  for q in 0.." << rule.size() << ":\n";
  s << "    W = w[q] * "
    << (kind == IntegralKind::cell ? "|detJ|" : "facet_area / reference_facet_area")
    << "\n";
  block(0, "    ");
  const std::string acc = "r" + std::to_string(output);
  if (rank == 0)
    s << "    A += W * " << acc << "\n";
  else
  {
    s << "    for i in 0.." << sh[0] << ":\n";
    block(1, "      ");
    if (rank == 1)
      s << "      A[i] += W * " << acc << "\n";
    else
    {
      s << "      for j in 0.." << sh[1] << ":\n";
      block(2, "        ");
      block(3, "        ");
      s << "        A[i][j] += W * " << acc << "\n";
    }
  }
  return s.str();
}
//-----------------------------------------------------------------------------
int CompiledForm::coefficient_index(const std::string& name) const
{
  for (std::size_t i = 0; i < coefficients.size(); ++i)
    if (coefficients[i].name == name)
      return static_cast<int>(i);
  return -1;
}
//-----------------------------------------------------------------------------
bool CompiledForm::has_interior_facets() const
{
  for (const auto& k : kernels)
    if (k.kind == IntegralKind::interior_facet)
      return true;
  return false;
}
//-----------------------------------------------------------------------------
CompiledForm femkit::compile_form(const fl::Form& form, const CompileOptions& options)
{
  const auto md = fl::check_form(form);
  fl::check_arity(form);
  if (form.empty())
    throw Error(ErrorKind::InvalidArgument, "cannot compile an empty form");

  CompiledForm cf;
  cf.rank = md.rank;
  for (const auto& a : md.arguments)
    cf.arguments.push_back(a->element);
  for (const auto& c : md.coefficients)
  {
    CoefficientInfo ci;
    ci.id = c->index;
    ci.name = c->name;
    ci.element = c->element;
    ci.value_size = c->value_size();
    ci.degree = c->degree;
    for (const auto& other : cf.coefficients)
    {
      if (other.name == ci.name)
      {
        throw Error(ErrorKind::InvalidArgument,
                    "two coefficients named '" + ci.name + "'");
      }
    }
    cf.coefficients.push_back(ci);
  }
  for (const auto& name : md.constants)
  {
    ConstantInfo k;
    k.name = name;
    bool found = false;
    for (const auto& itg : form.integrals())
    {
      std::function<void(const Expr&)> find = [&](const Expr& e)
      {
        if (found)
          return;
        if (e->op == Op::constant and e->name == name)
        {
          k.value = e->value;
          found = true;
        }
        for (const auto& o : e->operands)
          find(o);
      };
      find(itg.integrand);
    }
    cf.constants.push_back(k);
  }

  // cell and dimension
  int tdim = options.tdim, gdim = options.gdim;
  cell::Type ct = cell::Type::triangle;
  bool have_cell = false;
  auto take = [&](const std::shared_ptr<const FiniteElement>& e)
  {
    if (!e)
      return;
    if (have_cell and e->cell_type() != ct)
      throw Error(ErrorKind::ShapeMismatch, "form mixes elements on different cells");
    ct = e->cell_type();
    have_cell = true;
  };
  for (const auto& e : cf.arguments)
    take(e);
  for (const auto& c : cf.coefficients)
    take(c.element);
  if (!have_cell)
  {
    if (tdim < 1)
    {
      throw Error(ErrorKind::InvalidArgument,
                  "form has no elements; the cell must be given");
    }
    ct = cell::simplex(tdim);
  }
  tdim = cell::topological_dimension(ct);
  for (const auto& itg : form.integrals())
    gdim = std::max(gdim, itg.integrand->gdim);
  if (gdim < 1)
    gdim = tdim;

  // group integrals by (measure, subdomain)
  std::map<std::pair<int, int>, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < form.integrals().size(); ++i)
  {
    const auto& itg = form.integrals()[i];
    groups[{static_cast<int>(itg.measure), itg.subdomain}].push_back(i);
  }

  for (const auto& [key, idx] : groups)
  {
    Kernel k;
    k.kind = static_cast<IntegralKind>(key.first);
    k.subdomain = key.second;
    k.rank = cf.rank;
    k.cell = ct;
    k.gdim = gdim;
    int degree = 0;
    Expr integrand;
    for (std::size_t i : idx)
    {
      degree = std::max(degree, md.degrees[i]);
      const auto& e = form.integrals()[i].integrand;
      integrand = integrand ? fl::sum(integrand, e) : e;
    }
    if (options.degree > 0)
      degree = options.degree;
    k.degree = degree;
    k.rule = k.kind == IntegralKind::cell ? quadrature::make_rule(ct, degree)
                                          : quadrature::make_rule(tdim - 1, degree);
    for (const auto& a : cf.arguments)
      k.elements.push_back(a);

    Lowering low(k, cf, k.kind);
    k.output = low.lower_integrand(integrand);
    low.prune();
    build_tables(k);
    cf.kernels.push_back(std::move(k));
  }
  return cf;
}
//-----------------------------------------------------------------------------
std::string femkit::pseudocode(const CompiledForm& form)
{
  std::string s;
  for (const auto& k : form.kernels)
    s += k.pseudocode();
  return s;
}
//-----------------------------------------------------------------------------
namespace
{
using json = nlohmann::ordered_json;

json element_json(const ElementDescriptor& d)
{
  json j;
  j["family"] = family_name(d.family);
  j["cell"] = cell::to_string(d.cell);
  j["degree"] = d.degree;
  j["sub"] = json::array();
  for (const auto& s : d.sub)
    j["sub"].push_back(element_json(s));
  return j;
}

json element_json(const std::shared_ptr<const FiniteElement>& e)
{
  return e ? element_json(e->descriptor()) : json(nullptr);
}

ElementDescriptor element_descriptor(const json& j)
{
  ElementDescriptor d;
  const std::string f = j.at("family").get<std::string>();
  if (f == "Vector")
    d.family = Family::Vector;
  else if (f == "Mixed")
    d.family = Family::Mixed;
  else
    d.family = family_from_string(f);
  d.cell = cell::from_string(j.at("cell").get<std::string>());
  d.degree = j.at("degree").get<int>();
  for (const auto& s : j.at("sub"))
    d.sub.push_back(element_descriptor(s));
  return d;
}

class ElementCache
{
public:
  std::shared_ptr<const FiniteElement> get(const json& j)
  {
    if (j.is_null())
      return nullptr;
    const auto d = element_descriptor(j);
    const std::string key = d.str();
    auto it = _cache.find(key);
    if (it != _cache.end())
      return it->second;
    auto e = std::make_shared<const FiniteElement>(d);
    _cache.emplace(key, e);
    return e;
  }

private:
  std::map<std::string, std::shared_ptr<const FiniteElement>> _cache;
};

Instruction::Op op_from_string(const std::string& s)
{
  for (int i = 0; i <= Instruction::sign; ++i)
    if (s == femkit::to_string(static_cast<Instruction::Op>(i)))
      return static_cast<Instruction::Op>(i);
  throw Error(ErrorKind::ParseError, "unknown instruction '" + s + "'");
}

IntegralKind kind_from_string(const std::string& s)
{
  if (s == "cell")
    return IntegralKind::cell;
  if (s == "exterior_facet")
    return IntegralKind::exterior_facet;
  if (s == "interior_facet")
    return IntegralKind::interior_facet;
  throw Error(ErrorKind::ParseError, "unknown integral kind '" + s + "'");
}
} // namespace

//-----------------------------------------------------------------------------
std::string femkit::to_ir(const CompiledForm& form)
{
  json j;
  j["schema"] = "femkit-kir-1";
  j["rank"] = form.rank;
  j["arguments"] = json::array();
  for (const auto& a : form.arguments)
    j["arguments"].push_back(element_json(a));
  j["coefficients"] = json::array();
  for (const auto& c : form.coefficients)
  {
    json cj;
    cj["id"] = c.id;
    cj["name"] = c.name;
    cj["element"] = element_json(c.element);
    cj["value_size"] = c.value_size;
    cj["degree"] = c.degree;
    j["coefficients"].push_back(cj);
  }
  j["constants"] = json::array();
  for (const auto& c : form.constants)
    j["constants"].push_back({{"name", c.name}, {"value", c.value}});
  j["kernels"] = json::array();
  for (const auto& k : form.kernels)
  {
    json kj;
    kj["kind"] = to_string(k.kind);
    kj["subdomain"] = k.subdomain;
    kj["rank"] = k.rank;
    kj["cell"] = cell::to_string(k.cell);
    kj["gdim"] = k.gdim;
    kj["degree"] = k.degree;
    kj["shape"] = k.shape();
    kj["elements"] = json::array();
    for (const auto& e : k.elements)
      kj["elements"].push_back(element_json(e));
    kj["coefficients"] = k.coefficients;
    kj["point_coefficients"] = k.point_coefficients;
    kj["constants"] = k.constants;
    kj["quadrature"] = {{"tdim", k.rule.tdim},
                        {"degree", k.rule.degree},
                        {"points", k.rule.points},
                        {"weights", k.rule.weights}};
    kj["tables"] = json::array();
    for (std::size_t e = 0; e < k.tables.size(); ++e)
    {
      for (std::size_t s = 0; s < k.tables[e].size(); ++s)
      {
        const auto& t = k.tables[e][s];
        json tj;
        tj["element"] = e;
        tj["point_set"] = s;
        tj["shape"] = {t.data.size() / (t.npoints * t.ndofs * t.value_size), t.npoints, t.ndofs, t.value_size};
        tj["nderiv"] = t.nderiv;
        tj["data"] = t.data;
        kj["tables"].push_back(tj);
      }
    }
    kj["tape"] = json::array();
    for (const auto& in : k.tape)
    {
      json ij;
      ij["op"] = femkit::to_string(in.op);
      ij["args"] = json::array();
      if (in.a >= 0)
        ij["args"].push_back(in.a);
      if (in.b >= 0)
        ij["args"].push_back(in.b);
      if (in.op == Instruction::constant or in.op == Instruction::pow)
        ij["value"] = in.value;
      ij["data"] = in.ints;
      ij["level"] = in.level;
      kj["tape"].push_back(ij);
    }
    kj["output"] = k.output;
    j["kernels"].push_back(kj);
  }
  return j.dump(1);
}
//-----------------------------------------------------------------------------
CompiledForm femkit::from_ir(const std::string& text)
{
  json j;
  try
  {
    j = json::parse(text);
  }
  catch (const json::exception& e)
  {
    throw Error(ErrorKind::ParseError, e.what());
  }
  if (!j.is_object() or !j.contains("schema") or j["schema"] != "femkit-kir-1")
    throw Error(ErrorKind::SchemaMismatch, "expected schema femkit-kir-1");

  try
  {
    ElementCache cache;
    CompiledForm cf;
    cf.rank = j.at("rank").get<int>();
    for (const auto& a : j.at("arguments"))
      cf.arguments.push_back(cache.get(a));
    for (const auto& cj : j.at("coefficients"))
    {
      CoefficientInfo c;
      c.id = cj.at("id").get<int>();
      c.name = cj.at("name").get<std::string>();
      c.element = cache.get(cj.at("element"));
      c.value_size = cj.at("value_size").get<int>();
      c.degree = cj.at("degree").get<int>();
      cf.coefficients.push_back(c);
    }
    for (const auto& cj : j.at("constants"))
      cf.constants.push_back({cj.at("name").get<std::string>(),
                              cj.at("value").get<double>()});
    for (const auto& kj : j.at("kernels"))
    {
      Kernel k;
      k.kind = kind_from_string(kj.at("kind").get<std::string>());
      k.subdomain = kj.at("subdomain").get<int>();
      k.rank = kj.at("rank").get<int>();
      k.cell = cell::from_string(kj.at("cell").get<std::string>());
      k.gdim = kj.at("gdim").get<int>();
      k.degree = kj.at("degree").get<int>();
      for (const auto& e : kj.at("elements"))
        k.elements.push_back(cache.get(e));
      k.coefficients = kj.at("coefficients").get<std::vector<int>>();
      k.point_coefficients = kj.at("point_coefficients").get<std::vector<int>>();
      k.constants = kj.at("constants").get<std::vector<int>>();
      const auto& qj = kj.at("quadrature");
      k.rule.tdim = qj.at("tdim").get<int>();
      k.rule.degree = qj.at("degree").get<int>();
      k.rule.points = qj.at("points").get<std::vector<double>>();
      k.rule.weights = qj.at("weights").get<std::vector<double>>();
      k.tables.resize(k.elements.size());
      for (const auto& tj : kj.at("tables"))
      {
        const auto e = tj.at("element").get<std::size_t>();
        const auto s = tj.at("point_set").get<std::size_t>();
        const auto sh = tj.at("shape").get<std::vector<std::size_t>>();
        if (e >= k.tables.size() or sh.size() != 4)
          throw Error(ErrorKind::ParseError, "bad table entry");
        if (k.tables[e].size() <= s)
          k.tables[e].resize(s + 1);
        Tabulation& t = k.tables[e][s];
        t.nderiv = tj.at("nderiv").get<int>();
        t.npoints = sh[1];
        t.ndofs = static_cast<int>(sh[2]);
        t.value_size = static_cast<int>(sh[3]);
        t.data = tj.at("data").get<std::vector<double>>();
        if (t.data.size() != sh[0] * sh[1] * sh[2] * sh[3])
          throw Error(ErrorKind::ParseError, "table data size does not match its shape");
      }
      for (const auto& ij : kj.at("tape"))
      {
        Instruction in;
        in.op = op_from_string(ij.at("op").get<std::string>());
        const auto args = ij.at("args").get<std::vector<std::int32_t>>();
        if (args.size() > 0)
          in.a = args[0];
        if (args.size() > 1)
          in.b = args[1];
        if (ij.contains("value"))
          in.value = ij["value"].get<double>();
        in.ints = ij.at("data").get<std::array<std::int32_t, 4>>();
        in.level = ij.at("level").get<std::uint8_t>();
        const auto r = static_cast<std::int32_t>(k.tape.size());
        if (in.a >= r or in.b >= r)
          throw Error(ErrorKind::ParseError, "instruction reads a later register");
        k.tape.push_back(in);
      }
      k.output = kj.at("output").get<std::int32_t>();
      if (k.output < 0 or k.output >= static_cast<std::int32_t>(k.tape.size()))
        throw Error(ErrorKind::ParseError, "output register out of range");
      cf.kernels.push_back(std::move(k));
    }
    return cf;
  }
  catch (const json::exception& e)
  {
    throw Error(ErrorKind::ParseError, e.what());
  }
}
//-----------------------------------------------------------------------------
