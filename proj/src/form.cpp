// Copyright (c) 2026 femkit contributors
// SPDX-License-Identifier:    MIT

#include <femkit/error.h>
#include <femkit/form.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <set>
#include <sstream>

using namespace femkit;
using namespace femkit::fl;

namespace
{
std::shared_ptr<Node> make(Op op, std::vector<Expr> operands = {})
{
  auto n = std::make_shared<Node>();
  n->op = op;
  for (const auto& o : operands)
  {
    if (!o)
      throw Error(ErrorKind::InvalidArgument, "null expression operand");
    n->gdim = std::max(n->gdim, o->gdim);
  }
  n->operands = std::move(operands);
  return n;
}

std::string shape_str(const std::vector<int>& s)
{
  std::string out = "(";
  for (std::size_t i = 0; i < s.size(); ++i)
    out += (i ? "," : "") + std::to_string(s[i]);
  return out + ")";
}

[[noreturn]] void shape_error(const std::string& what, const Expr& a,
                              const Expr& b = nullptr)
{
  std::string msg = what + ": shape " + shape_str(a->shape);
  if (b)
    msg += " and " + shape_str(b->shape);
  throw Error(ErrorKind::ShapeMismatch, msg);
}

std::vector<int> element_shape(const FiniteElement& e)
{
  if (e.is_scalar())
    return {};
  return {e.value_size()};
}

std::string fmt(double v)
{
  std::ostringstream s;
  s.precision(17);
  s << v;
  return s.str();
}

const char* fn_name(MathFunction f)
{
  switch (f)
  {
  case MathFunction::sin: return "sin";
  case MathFunction::cos: return "cos";
  case MathFunction::exp: return "exp";
  case MathFunction::sqrt: return "sqrt";
  default: return "abs";
  }
}

bool is_zero(const Expr& e) { return e->op == Op::constant and e->name.empty() and e->value == 0.0 and e->is_scalar(); }

void visit(const Expr& e, const std::function<void(const Expr&)>& f)
{
  f(e);
  for (const auto& o : e->operands)
    visit(o, f);
}
} // namespace

//-----------------------------------------------------------------------------
int Node::value_size() const
{
  int n = 1;
  for (int s : shape)
    n *= s;
  return n;
}
//-----------------------------------------------------------------------------
Expr fl::argument(int slot, std::shared_ptr<const FiniteElement> element)
{
  if (slot < 0 or slot > 1)
    throw Error(ErrorKind::InvalidArgument, "argument slot must be 0 or 1");
  auto n = make(Op::argument);
  n->index = slot;
  n->shape = element_shape(*element);
  n->gdim = element->tdim();
  n->degree = element->degree();
  n->element = std::move(element);
  return n;
}
//-----------------------------------------------------------------------------
std::vector<Expr>
fl::split_argument(int slot, std::shared_ptr<const FiniteElement> element)
{
  if (element->is_scalar())
    throw Error(ErrorKind::NotMixed, "cannot split a scalar element");
  std::vector<Expr> out;
  for (int i = 0; i < element->num_sub_elements(); ++i)
  {
    const auto& sub = element->sub_element(i);
    auto n = make(Op::argument);
    n->index = slot;
    n->shape = element_shape(sub);
    n->gdim = element->tdim();
    n->degree = sub.degree();
    n->value_offset = element->sub_value_offset(i);
    n->element = element;
    out.push_back(n);
  }
  return out;
}
//-----------------------------------------------------------------------------
Expr fl::coefficient(int id, const std::string& name,
                     std::shared_ptr<const FiniteElement> element)
{
  auto n = make(Op::coefficient);
  n->index = id;
  n->name = name;
  n->shape = element_shape(*element);
  n->gdim = element->tdim();
  n->degree = element->degree();
  n->element = std::move(element);
  return n;
}
//-----------------------------------------------------------------------------
Expr fl::point_coefficient(int id, const std::string& name,
                           std::vector<int> shape, int degree, int gdim)
{
  auto n = make(Op::coefficient);
  n->index = id;
  n->name = name;
  n->shape = std::move(shape);
  n->degree = degree;
  n->gdim = gdim;
  return n;
}
//-----------------------------------------------------------------------------
Expr fl::sub_coefficient(const Expr& c, int i)
{
  if (c->op != Op::coefficient or !c->element or c->element->is_scalar())
    throw Error(ErrorKind::NotMixed, "cannot split coefficient");
  const auto& e = *c->element;
  auto n = std::make_shared<Node>(*c);
  n->shape = element_shape(e.sub_element(i));
  n->degree = e.sub_element(i).degree();
  n->value_offset = e.sub_value_offset(i);
  return n;
}
//-----------------------------------------------------------------------------
Expr fl::constant(double value, const std::string& name)
{
  auto n = make(Op::constant);
  n->value = value;
  n->name = name;
  return n;
}
//-----------------------------------------------------------------------------
Expr fl::spatial_coordinate(int gdim)
{
  auto n = make(Op::spatial_coordinate);
  n->shape = {gdim};
  n->gdim = gdim;
  n->degree = 1;
  return n;
}
//-----------------------------------------------------------------------------
Expr fl::facet_normal(int gdim)
{
  auto n = make(Op::facet_normal);
  n->shape = {gdim};
  n->gdim = gdim;
  return n;
}
//-----------------------------------------------------------------------------
Expr fl::cell_size(int gdim)
{
  auto n = make(Op::cell_size);
  n->gdim = gdim;
  return n;
}
//-----------------------------------------------------------------------------
Expr fl::grad(const Expr& e)
{
  if (e->gdim == 0)
  {
    throw Error(ErrorKind::ShapeMismatch,
                "gradient of an expression without geometric dimension");
  }
  if (e->shape.size() > 1)
    shape_error("grad of a matrix", e);
  auto n = make(Op::grad, {e});
  n->shape = e->shape;
  n->shape.push_back(e->gdim);
  return n;
}
//-----------------------------------------------------------------------------
Expr fl::div(const Expr& e)
{
  if (e->shape.empty() or e->shape.back() != e->gdim)
    shape_error("div", e);
  auto n = make(Op::div, {e});
  n->shape = e->shape;
  n->shape.pop_back();
  return n;
}
//-----------------------------------------------------------------------------
Expr fl::inner(const Expr& a, const Expr& b)
{
  if (a->shape != b->shape)
    shape_error("inner", a, b);
  return make(Op::inner, {a, b});
}
//-----------------------------------------------------------------------------
Expr fl::dot(const Expr& a, const Expr& b)
{
  if (a->shape.empty() and b->shape.empty())
    return product(a, b);
  if (a->shape.empty() or b->shape.empty()
      or a->shape.back() != b->shape.front())
  {
    shape_error("dot", a, b);
  }
  auto n = make(Op::dot, {a, b});
  n->shape.assign(a->shape.begin(), a->shape.end() - 1);
  n->shape.insert(n->shape.end(), b->shape.begin() + 1, b->shape.end());
  if (n->shape.size() > 2)
    shape_error("dot", a, b);
  return n;
}
//-----------------------------------------------------------------------------
Expr fl::sum(const Expr& a, const Expr& b)
{
  if (a->shape != b->shape)
    shape_error("sum", a, b);
  auto n = make(Op::sum, {a, b});
  n->shape = a->shape;
  return n;
}
//-----------------------------------------------------------------------------
Expr fl::difference(const Expr& a, const Expr& b)
{
  return sum(a, negation(b));
}
//-----------------------------------------------------------------------------
Expr fl::product(const Expr& a, const Expr& b)
{
  if (a->shape.empty() or b->shape.empty())
  {
    auto n = make(Op::product, {a, b});
    n->shape = a->shape.empty() ? b->shape : a->shape;
    return n;
  }
  if (a->shape.size() == 2 and b->shape.size() == 1)
    return dot(a, b);
  shape_error("product", a, b);
}
//-----------------------------------------------------------------------------
Expr fl::division(const Expr& a, const Expr& b)
{
  if (!b->shape.empty())
    shape_error("division by non-scalar", b);
  auto n = make(Op::division, {a, b});
  n->shape = a->shape;
  return n;
}
//-----------------------------------------------------------------------------
Expr fl::negation(const Expr& a)
{
  auto n = make(Op::negation, {a});
  n->shape = a->shape;
  return n;
}
//-----------------------------------------------------------------------------
Expr fl::power(const Expr& base, double exponent)
{
  if (!base->shape.empty())
    shape_error("power of non-scalar", base);
  auto n = make(Op::power, {base});
  n->value = exponent;
  return n;
}
//-----------------------------------------------------------------------------
Expr fl::call(MathFunction fn, const Expr& a)
{
  if (!a->shape.empty())
    shape_error(std::string(fn_name(fn)) + " of non-scalar", a);
  auto n = make(Op::call, {a});
  n->fn = fn;
  return n;
}
//-----------------------------------------------------------------------------
Expr fl::indexed(const Expr& e, int component)
{
  if (e->shape.empty() or component < 0 or component >= e->shape[0])
  {
    throw Error(ErrorKind::ShapeMismatch,
                "component " + std::to_string(component)
                    + " out of range for shape " + shape_str(e->shape));
  }
  auto n = make(Op::indexed, {e});
  n->index = component;
  n->shape.assign(e->shape.begin() + 1, e->shape.end());
  return n;
}
//-----------------------------------------------------------------------------
Expr fl::restrict(const Expr& e, Side side)
{
  if (side == Side::none)
    return e;
  bool nested = false;
  visit(e, [&](const Expr& x) { nested = nested or x->op == Op::restricted; });
  if (nested)
  {
    throw Error(ErrorKind::InvalidArgument,
                "expression is already restricted");
  }
  auto n = make(Op::restricted, {e});
  n->side = side;
  n->shape = e->shape;
  return n;
}
//-----------------------------------------------------------------------------
Expr fl::jump(const Expr& v, const Expr& n)
{
  const Expr vp = restrict(v, Side::plus), vm = restrict(v, Side::minus);
  const Expr np = restrict(n, Side::plus), nm = restrict(n, Side::minus);
  if (v->shape.empty())
    return sum(product(vp, np), product(vm, nm));
  return sum(dot(vp, np), dot(vm, nm));
}
//-----------------------------------------------------------------------------
Expr fl::jump(const Expr& v)
{
  return difference(restrict(v, Side::plus), restrict(v, Side::minus));
}
//-----------------------------------------------------------------------------
Expr fl::avg(const Expr& v)
{
  return product(constant(0.5),
                 sum(restrict(v, Side::plus), restrict(v, Side::minus)));
}
//-----------------------------------------------------------------------------
std::string fl::to_string(Measure m)
{
  switch (m)
  {
  case Measure::cell: return "dx";
  case Measure::exterior_facet: return "ds";
  default: return "dS";
  }
}
//-----------------------------------------------------------------------------
std::string fl::to_string(const Expr& e)
{
  auto piece = [&]() -> std::string
  {
    if (!e->element or e->element->is_scalar())
      return "";
    const int vs = e->value_size();
    if (e->value_offset == 0 and vs == e->element->value_size())
      return "";
    return "[" + std::to_string(e->value_offset) + ":"
           + std::to_string(e->value_offset + vs) + "]";
  };
  auto op = [&](int i) { return to_string(e->operands[i]); };
  switch (e->op)
  {
  case Op::argument: return (e->index == 0 ? "v" : "u") + piece();
  case Op::coefficient: return e->name + "#" + std::to_string(e->index) + piece();
  case Op::constant: return e->name.empty() ? fmt(e->value) : "$" + e->name;
  case Op::spatial_coordinate: return "x";
  case Op::facet_normal: return "n";
  case Op::cell_size: return "h";
  case Op::grad: return "grad(" + op(0) + ")";
  case Op::div: return "div(" + op(0) + ")";
  case Op::inner: return "inner(" + op(0) + ", " + op(1) + ")";
  case Op::dot: return "dot(" + op(0) + ", " + op(1) + ")";
  case Op::sum: return "(" + op(0) + " + " + op(1) + ")";
  case Op::product: return "(" + op(0) + " * " + op(1) + ")";
  case Op::division: return "(" + op(0) + " / " + op(1) + ")";
  case Op::negation: return "(-" + op(0) + ")";
  case Op::power: return "(" + op(0) + " ** " + fmt(e->value) + ")";
  case Op::call: return std::string(fn_name(e->fn)) + "(" + op(0) + ")";
  case Op::indexed: return op(0) + "[" + std::to_string(e->index) + "]";
  case Op::restricted:
    return op(0) + (e->side == Side::plus ? "('+')" : "('-')");
  }
  return "?";
}
//-----------------------------------------------------------------------------
std::string fl::to_string(const Form& f)
{
  std::string s;
  for (const auto& itg : f.integrals())
  {
    if (!s.empty())
      s += " + ";
    s += to_string(itg.integrand) + "*" + to_string(itg.measure);
    if (itg.subdomain >= 0)
      s += "(" + std::to_string(itg.subdomain) + ")";
  }
  return s.empty() ? "0" : s;
}
//-----------------------------------------------------------------------------
int Form::rank() const
{
  std::set<int> slots;
  for (const auto& itg : _integrals)
    visit(itg.integrand, [&](const Expr& x)
          {
            if (x->op == Op::argument)
              slots.insert(x->index);
          });
  return static_cast<int>(slots.size());
}
//-----------------------------------------------------------------------------
std::vector<Expr> Form::arguments() const
{
  std::map<int, Expr> slots;
  for (const auto& itg : _integrals)
    visit(itg.integrand, [&](const Expr& x)
          {
            if (x->op == Op::argument and !slots.count(x->index))
              slots[x->index] = argument(x->index, x->element);
          });
  std::vector<Expr> out;
  for (auto& [k, v] : slots)
    out.push_back(v);
  return out;
}
//-----------------------------------------------------------------------------
std::vector<Expr> Form::coefficients() const
{
  std::map<int, Expr> found;
  for (const auto& itg : _integrals)
    visit(itg.integrand, [&](const Expr& x)
          {
            if (x->op != Op::coefficient or found.count(x->index))
              return;
            if (x->element)
              found[x->index] = coefficient(x->index, x->name, x->element);
            else
              found[x->index] = x;
          });
  std::vector<Expr> out;
  for (auto& [k, v] : found)
    out.push_back(v);
  return out;
}
//-----------------------------------------------------------------------------
std::vector<std::string> Form::constants() const
{
  std::set<std::string> names;
  for (const auto& itg : _integrals)
    visit(itg.integrand, [&](const Expr& x)
          {
            if (x->op == Op::constant and !x->name.empty())
              names.insert(x->name);
          });
  return {names.begin(), names.end()};
}
//-----------------------------------------------------------------------------
bool Form::has_measure(Measure m) const
{
  for (const auto& itg : _integrals)
    if (itg.measure == m)
      return true;
  return false;
}
//-----------------------------------------------------------------------------
Form fl::integrate(const Expr& integrand, Measure measure, int subdomain)
{
  if (!integrand->shape.empty())
  {
    throw Error(ErrorKind::ShapeMismatch,
                "integrand must be scalar, got shape "
                    + shape_str(integrand->shape));
  }

  // walk with the restriction state
  std::function<void(const Expr&, bool)> check
      = [&](const Expr& e, bool restricted)
  {
    if (e->op == Op::restricted)
    {
      if (measure != Measure::interior_facet)
      {
        throw Error(ErrorKind::InvalidArgument,
                    "restriction used outside an interior-facet integral");
      }
      restricted = true;
    }
    const bool needs = e->op == Op::argument or e->op == Op::coefficient
                       or e->op == Op::facet_normal or e->op == Op::cell_size;
    if (needs and measure == Measure::interior_facet and !restricted)
    {
      throw Error(ErrorKind::UnrestrictedInteriorFacet,
                  "'" + to_string(e)
                      + "' must be restricted in an interior-facet integral");
    }
    if (e->op == Op::facet_normal and measure == Measure::cell)
    {
      throw Error(ErrorKind::UnsupportedExpression,
                  "facet normal in a cell integral");
    }
    for (const auto& o : e->operands)
      check(o, restricted);
  };
  check(integrand, false);
  return Form({Integral{integrand, measure, subdomain}});
}
//-----------------------------------------------------------------------------
Form fl::operator+(const Form& a, const Form& b)
{
  auto v = a.integrals();
  v.insert(v.end(), b.integrals().begin(), b.integrals().end());
  return Form(std::move(v));
}
//-----------------------------------------------------------------------------
Form fl::operator-(const Form& a) { return constant(-1.0) * a; }
//-----------------------------------------------------------------------------
Form fl::operator-(const Form& a, const Form& b) { return a + (-b); }
//-----------------------------------------------------------------------------
Form fl::operator*(const Expr& s, const Form& f)
{
  if (!s->shape.empty())
    shape_error("form scaling", s);
  std::vector<Integral> v;
  for (const auto& itg : f.integrals())
  {
    auto i = itg;
    if (s->op == Op::constant and s->name.empty() and s->value == -1.0)
      i.integrand = negation(itg.integrand);
    else
      i.integrand = product(s, itg.integrand);
    v.push_back(i);
  }
  return Form(std::move(v));
}
//-----------------------------------------------------------------------------
std::vector<Expr> fl::expand(const Expr& e)
{
  using Map = std::function<Expr(const Expr&)>;
  auto linear = [](Map f) -> Map
  {
    return [f](const Expr& t)
    { return t->op == Op::negation ? negation(f(t->operands[0])) : f(t); };
  };
  auto rebuild1 = [&](const std::function<Expr(const Expr&)>& f)
  {
    std::vector<Expr> out;
    for (const auto& t : expand(e->operands[0]))
      out.push_back(f(t));
    return out;
  };
  auto rebuild2 = [&](const std::function<Expr(const Expr&, const Expr&)>& f)
  {
    std::vector<Expr> out;
    const auto a = expand(e->operands[0]);
    const auto b = expand(e->operands[1]);
    // negations are pulled out of each monomial
    for (const auto& x : a)
      for (const auto& y : b)
      {
        const bool nx = x->op == Op::negation, ny = y->op == Op::negation;
        Expr t = f(nx ? x->operands[0] : x, ny ? y->operands[0] : y);
        out.push_back(nx != ny ? negation(t) : t);
      }
    return out;
  };

  switch (e->op)
  {
  case Op::sum:
  {
    auto a = expand(e->operands[0]);
    auto b = expand(e->operands[1]);
    a.insert(a.end(), b.begin(), b.end());
    return a;
  }
  case Op::negation:
    return rebuild1([](const Expr& t)
                    { return t->op == Op::negation ? t->operands[0] : negation(t); });
  case Op::product: return rebuild2(product);
  case Op::dot: return rebuild2(dot);
  case Op::inner: return rebuild2(inner);
  case Op::division:
  {
    const Expr den = e->operands[1];
    return rebuild1(
        [&](const Expr& t)
        {
          if (t->op == Op::negation)
            return negation(division(t->operands[0], den));
          return division(t, den);
        });
  }
  case Op::grad: return rebuild1(linear(grad));
  case Op::div: return rebuild1(linear(div));
  case Op::indexed:
  {
    const int k = e->index;
    return rebuild1(linear([k](const Expr& t) { return indexed(t, k); }));
  }
  case Op::restricted:
  {
    const Side s = e->side;
    return rebuild1(linear([s](const Expr& t) { return restrict(t, s); }));
  }
  default: return {e};
  }
}
//-----------------------------------------------------------------------------
namespace
{
// Number of trial-function factors in a monomial; throws if the trial
// function appears in a non-linear position.
int trial_count(const Expr& e, bool nonlinear)
{
  if (e->op == Op::argument and e->index == 1)
  {
    if (nonlinear)
    {
      throw Error(ErrorKind::NonlinearInTrial,
                  "trial function in a non-linear position");
    }
    return 1;
  }
  switch (e->op)
  {
  case Op::call: return trial_count(e->operands[0], true);
  case Op::power: return trial_count(e->operands[0], true);
  case Op::division:
    return trial_count(e->operands[0], nonlinear)
           + trial_count(e->operands[1], true);
  case Op::sum:
    return std::max(trial_count(e->operands[0], nonlinear),
                    trial_count(e->operands[1], nonlinear));
  default:
  {
    int n = 0;
    for (const auto& o : e->operands)
      n += trial_count(o, nonlinear);
    return n;
  }
  }
}

void split_terms(const Form& F, Form& a, Form& L)
{
  std::vector<Integral> ai, li;
  for (const auto& itg : F.integrals())
  {
    Expr asum, lsum;
    for (const auto& t : expand(itg.integrand))
    {
      const int n = trial_count(t, false);
      if (n > 1)
      {
        throw Error(ErrorKind::NonlinearInTrial,
                    "term '" + to_string(t) + "' is not linear in the trial function");
      }
      if (n == 1)
        asum = asum ? sum(asum, t) : t;
      else
      {
        const Expr neg = t->op == Op::negation ? t->operands[0] : negation(t);
        lsum = lsum ? sum(lsum, neg) : neg;
      }
    }
    if (asum)
      ai.push_back({asum, itg.measure, itg.subdomain});
    if (lsum)
      li.push_back({lsum, itg.measure, itg.subdomain});
  }
  a = Form(std::move(ai));
  L = Form(std::move(li));
}
} // namespace
//-----------------------------------------------------------------------------
Form fl::lhs(const Form& F)
{
  Form a, L;
  split_terms(F, a, L);
  if (a.empty())
    throw Error(ErrorKind::EmptyBilinear, "form has no terms with a trial function");
  return a;
}
//-----------------------------------------------------------------------------
Form fl::rhs(const Form& F)
{
  Form a, L;
  split_terms(F, a, L);
  return L;
}
//-----------------------------------------------------------------------------
namespace
{
Expr add(const Expr& a, const Expr& b)
{
  if (!a)
    return b;
  if (!b)
    return a;
  return sum(a, b);
}

// Gateaux derivative of e with respect to coefficient id in direction du
// (a whole-element trial function). Returns null for zero.
Expr gateaux(const Expr& e, int id, const Expr& du)
{
  const auto& o = e->operands;
  switch (e->op)
  {
  case Op::coefficient:
  {
    if (e->index != id)
      return nullptr;
    if (e->value_offset == 0 and e->shape == du->shape)
      return du;
    // piece of a mixed coefficient: the matching piece of du
    auto n = std::make_shared<Node>(*du);
    n->shape = e->shape;
    n->value_offset = e->value_offset;
    n->degree = e->degree;
    return n;
  }
  case Op::argument:
  case Op::constant:
  case Op::spatial_coordinate:
  case Op::facet_normal:
  case Op::cell_size: return nullptr;
  case Op::grad:
  {
    auto d = gateaux(o[0], id, du);
    return d ? grad(d) : nullptr;
  }
  case Op::div:
  {
    auto d = gateaux(o[0], id, du);
    return d ? div(d) : nullptr;
  }
  case Op::indexed:
  {
    auto d = gateaux(o[0], id, du);
    return d ? indexed(d, e->index) : nullptr;
  }
  case Op::restricted:
  {
    auto d = gateaux(o[0], id, du);
    return d ? restrict(d, e->side) : nullptr;
  }
  case Op::negation:
  {
    auto d = gateaux(o[0], id, du);
    return d ? negation(d) : nullptr;
  }
  case Op::sum: return add(gateaux(o[0], id, du), gateaux(o[1], id, du));
  case Op::product:
  case Op::dot:
  case Op::inner:
  {
    auto f = e->op == Op::product ? product : e->op == Op::dot ? dot : inner;
    auto da = gateaux(o[0], id, du);
    auto db = gateaux(o[1], id, du);
    return add(da ? f(da, o[1]) : nullptr, db ? f(o[0], db) : nullptr);
  }
  case Op::division:
  {
    auto da = gateaux(o[0], id, du);
    auto db = gateaux(o[1], id, du);
    Expr r = da ? division(da, o[1]) : nullptr;
    if (db)
      r = add(r, negation(division(product(db, o[0]), product(o[1], o[1]))));
    return r;
  }
  case Op::power:
  {
    auto d = gateaux(o[0], id, du);
    if (!d)
      return nullptr;
    const double k = e->value;
    if (k != std::floor(k))
    {
      throw Error(ErrorKind::UnsupportedNode,
                  "derivative of a non-integer power");
    }
    if (k == 0.0)
      return nullptr;
    Expr base = k == 1.0 ? nullptr : k == 2.0 ? o[0] : power(o[0], k - 1.0);
    Expr dk = product(constant(k), d);
    return base ? product(dk, base) : dk;
  }
  case Op::call:
  {
    auto d = gateaux(o[0], id, du);
    if (!d)
      return nullptr;
    switch (e->fn)
    {
    case MathFunction::sin: return product(call(MathFunction::cos, o[0]), d);
    case MathFunction::cos:
      return negation(product(call(MathFunction::sin, o[0]), d));
    case MathFunction::exp: return product(e, d);
    case MathFunction::sqrt:
      return division(d, product(constant(2.0), e));
    default:
      throw Error(ErrorKind::UnsupportedNode, "derivative of abs");
    }
  }
  }
  return nullptr;
}
} // namespace
//-----------------------------------------------------------------------------
Form fl::derivative(const Form& F, const Expr& u)
{
  if (u->op != Op::coefficient or !u->element)
  {
    throw Error(ErrorKind::InvalidArgument,
                "derivative needs a coefficient with an element");
  }
  return derivative(F, u, argument(1, u->element));
}
//-----------------------------------------------------------------------------
Form fl::derivative(const Form& F, const Expr& u, const Expr& du)
{
  if (u->op != Op::coefficient)
    throw Error(ErrorKind::InvalidArgument, "derivative with respect to a non-coefficient");
  if (du->op != Op::argument or du->index != 1)
    throw Error(ErrorKind::InvalidArgument, "direction must be a trial function");
  if (u->element and du->element and !(u->element->descriptor() == du->element->descriptor()))
    throw Error(ErrorKind::ShapeMismatch, "direction lives on a different element");
  std::vector<Integral> out;
  for (const auto& itg : F.integrals())
  {
    auto d = gateaux(itg.integrand, u->index, du);
    if (d)
      out.push_back({d, itg.measure, itg.subdomain});
  }
  return Form(std::move(out));
}
//-----------------------------------------------------------------------------
Expr fl::replace(const Expr& e, int id, const Expr& by)
{
  if (e->op == Op::coefficient and e->index == id)
  {
    if (e->shape != by->shape)
      shape_error("replace", e, by);
    if (e->value_offset != 0 or (e->element and !e->element->is_scalar()
                                 and e->value_size() != e->element->value_size()))
      throw Error(ErrorKind::Unsupported, "cannot replace a piece of a coefficient");
    return by;
  }
  if (e->operands.empty())
    return e;
  bool changed = false;
  std::vector<Expr> ops;
  for (const auto& o : e->operands)
  {
    ops.push_back(replace(o, id, by));
    changed = changed or ops.back() != o;
  }
  if (!changed)
    return e;
  auto n = std::make_shared<Node>(*e);
  n->operands = std::move(ops);
  for (const auto& o : n->operands)
    n->gdim = std::max(n->gdim, o->gdim);
  return n;
}
//-----------------------------------------------------------------------------
Form fl::replace(const Form& f, int id, const Expr& by)
{
  std::vector<Integral> out;
  for (auto itg : f.integrals())
  {
    itg.integrand = replace(itg.integrand, id, by);
    out.push_back(itg);
  }
  return Form(std::move(out));
}
//-----------------------------------------------------------------------------
namespace
{
void flatten(const Expr& e, Op op, std::vector<Expr>& out)
{
  if (e->op == op and (op != Op::product or e->operands[0]->shape.empty()
                       or e->operands[1]->shape.empty()))
  {
    flatten(e->operands[0], op, out);
    flatten(e->operands[1], op, out);
  }
  else
    out.push_back(e);
}

// Text that ignores the order of commutative operands; `swap` exchanges
// test and trial functions.
std::string canonical(const Expr& e, bool swap)
{
  auto sorted = [&](Op op, const std::string& sep)
  {
    std::vector<Expr> parts;
    flatten(e, op, parts);
    std::vector<std::string> s;
    for (const auto& p : parts)
      s.push_back(canonical(p, swap));
    std::sort(s.begin(), s.end());
    std::string r = "(";
    for (std::size_t i = 0; i < s.size(); ++i)
      r += (i ? sep : "") + s[i];
    return r + ")";
  };

  switch (e->op)
  {
  case Op::argument:
  {
    auto n = std::make_shared<Node>(*e);
    if (swap)
      n->index = 1 - n->index;
    return to_string(Expr(n));
  }
  case Op::sum: return sorted(Op::sum, " + ");
  case Op::product: return sorted(Op::product, " * ");
  case Op::inner:
  case Op::dot:
  {
    auto a = canonical(e->operands[0], swap);
    auto b = canonical(e->operands[1], swap);
    const bool commutes = e->op == Op::inner
                          or (e->operands[0]->shape.size() == 1
                              and e->operands[1]->shape.size() == 1);
    if (commutes and b < a)
      std::swap(a, b);
    return std::string(e->op == Op::inner ? "inner(" : "dot(") + a + ", " + b
           + ")";
  }
  default:
  {
    if (e->operands.empty())
      return to_string(e);
    switch (e->op)
    {
    case Op::grad: return "grad(" + canonical(e->operands[0], swap) + ")";
    case Op::div: return "div(" + canonical(e->operands[0], swap) + ")";
    case Op::negation: return "(-" + canonical(e->operands[0], swap) + ")";
    case Op::division:
      return "(" + canonical(e->operands[0], swap) + " / "
             + canonical(e->operands[1], swap) + ")";
    case Op::power:
      return "(" + canonical(e->operands[0], swap) + " ** " + fmt(e->value) + ")";
    case Op::call:
      return std::string(fn_name(e->fn)) + "(" + canonical(e->operands[0], swap)
             + ")";
    case Op::indexed:
      return canonical(e->operands[0], swap) + "[" + std::to_string(e->index)
             + "]";
    case Op::restricted:
      return canonical(e->operands[0], swap)
             + (e->side == Side::plus ? "('+')" : "('-')");
    default: return to_string(e);
    }
  }
  }
}
} // namespace
//-----------------------------------------------------------------------------
bool fl::is_symmetric(const Form& a)
{
  if (a.rank() != 2)
    return false;
  auto args = a.arguments();
  if (!(args[0]->element->descriptor() == args[1]->element->descriptor()))
    return false;
  std::multiset<std::string> orig, swapped;
  for (const auto& itg : a.integrals())
  {
    const std::string tag = to_string(itg.measure) + std::to_string(itg.subdomain) + ":";
    for (const auto& t : expand(itg.integrand))
    {
      orig.insert(tag + canonical(t, false));
      swapped.insert(tag + canonical(t, true));
    }
  }
  return orig == swapped;
}
//-----------------------------------------------------------------------------
int fl::estimate_degree(const Expr& e)
{
  auto d = [&](int i) { return estimate_degree(e->operands[i]); };
  switch (e->op)
  {
  case Op::argument:
  case Op::coefficient:
  case Op::spatial_coordinate: return e->degree;
  case Op::constant:
  case Op::facet_normal:
  case Op::cell_size: return 0;
  case Op::grad:
  case Op::div: return std::max(d(0) - 1, 0);
  case Op::sum: return std::max(d(0), d(1));
  case Op::product:
  case Op::dot:
  case Op::inner:
  case Op::division: return d(0) + d(1);
  case Op::power:
  {
    const double k = e->value;
    if (k >= 0 and k == std::floor(k))
      return d(0) * static_cast<int>(k);
    return d(0) + 2;
  }
  case Op::call: return d(0) + 2;
  case Op::negation:
  case Op::indexed:
  case Op::restricted: return d(0);
  }
  return 0;
}
//-----------------------------------------------------------------------------
bool fl::depends_on_argument(const Expr& e, int slot)
{
  bool found = false;
  visit(e, [&](const Expr& x)
        { found = found or (x->op == Op::argument and x->index == slot); });
  return found;
}
//-----------------------------------------------------------------------------
bool fl::depends_on_coefficient(const Expr& e, int id)
{
  bool found = false;
  visit(e, [&](const Expr& x)
        { found = found or (x->op == Op::coefficient and x->index == id); });
  return found;
}
//-----------------------------------------------------------------------------
FormMetadata fl::check_form(const Form& form)
{
  FormMetadata md;
  std::map<int, std::string> slot_element;
  for (const auto& itg : form.integrals())
  {
    visit(itg.integrand, [&](const Expr& x)
          {
            if (x->op != Op::argument)
              return;
            const auto d = x->element->descriptor().str();
            auto [it, fresh] = slot_element.insert({x->index, d});
            if (!fresh and it->second != d)
            {
              throw Error(ErrorKind::MixedRanks,
                          "argument slot " + std::to_string(x->index)
                              + " used with elements " + it->second + " and " + d);
            }
          });
  }
  if (slot_element.count(1) and !slot_element.count(0))
    throw Error(ErrorKind::MixedRanks, "trial function without test function");

  md.rank = static_cast<int>(slot_element.size());
  md.arguments = form.arguments();
  md.coefficients = form.coefficients();
  md.constants = form.constants();

  for (const auto& itg : form.integrals())
  {
    md.degrees.push_back(std::clamp(estimate_degree(itg.integrand), 1, 20));
  }
  return md;
}
//-----------------------------------------------------------------------------
void fl::check_arity(const Form& form)
{
  const int rank = form.rank();
  for (const auto& itg : form.integrals())
  {
    for (const auto& t : expand(itg.integrand))
    {
      int r = 0;
      for (int s = 0; s < 2; ++s)
        r += depends_on_argument(t, s) ? 1 : 0;
      if (r != rank and !is_zero(t))
      {
        throw Error(ErrorKind::MixedRanks,
                    "term '" + to_string(t) + "' has arity " + std::to_string(r)
                        + " in a form of rank " + std::to_string(rank));
      }
    }
  }
}
//-----------------------------------------------------------------------------
