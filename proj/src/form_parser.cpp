// Copyright (c) 2026 femkit contributors
// SPDX-License-Identifier:    MIT

#include <femkit/error.h>
#include <femkit/expression.h>
#include <femkit/form_parser.h>

#include <cctype>
#include <cmath>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

using namespace femkit;
using namespace femkit::fl;

namespace
{
enum class Tok
{
  ident,
  number,
  string,
  op,
  newline,
  end
};

struct Token
{
  Tok kind;
  std::string text;
  double number = 0.0;
  int line = 0;
  int col = 0;
};

std::vector<Token> tokenize(const std::string& src)
{
  std::vector<Token> out;
  int line = 1, col = 1, depth = 0;
  std::size_t i = 0;
  auto adv = [&](std::size_t n = 1)
  {
    for (std::size_t k = 0; k < n; ++k, ++i)
    {
      if (src[i] == '\n')
      {
        ++line;
        col = 1;
      }
      else
        ++col;
    }
  };
  while (i < src.size())
  {
    const char c = src[i];
    if (c == '#')
    {
      while (i < src.size() and src[i] != '\n')
        adv();
      continue;
    }
    if (c == '\\' and i + 1 < src.size()
        and (src[i + 1] == '\n' or src[i + 1] == '\r'))
    {
      adv();
      if (src[i] == '\r')
        adv();
      if (i < src.size() and src[i] == '\n')
        adv();
      continue;
    }
    if (c == '\n')
    {
      if (depth == 0 and !out.empty() and out.back().kind != Tok::newline)
        out.push_back({Tok::newline, "\\n", 0.0, line, col});
      adv();
      continue;
    }
    if (std::isspace(static_cast<unsigned char>(c)))
    {
      adv();
      continue;
    }
    Token t{Tok::op, "", 0.0, line, col};
    if (std::isalpha(static_cast<unsigned char>(c)) or c == '_')
    {
      std::size_t j = i;
      while (j < src.size()
             and (std::isalnum(static_cast<unsigned char>(src[j])) or src[j] == '_'))
        ++j;
      t.kind = Tok::ident;
      t.text = src.substr(i, j - i);
      adv(j - i);
    }
    else if (std::isdigit(static_cast<unsigned char>(c))
             or (c == '.' and i + 1 < src.size()
                 and std::isdigit(static_cast<unsigned char>(src[i + 1]))))
    {
      const char* begin = src.c_str() + i;
      char* end = nullptr;
      t.kind = Tok::number;
      t.number = std::strtod(begin, &end);
      t.text = src.substr(i, static_cast<std::size_t>(end - begin));
      adv(static_cast<std::size_t>(end - begin));
    }
    else if (c == '"' or c == '\'')
    {
      std::size_t j = i + 1;
      while (j < src.size() and src[j] != c and src[j] != '\n')
        ++j;
      if (j >= src.size() or src[j] != c)
        throw Error(ErrorKind::SyntaxError, "unterminated string", line, col);
      t.kind = Tok::string;
      t.text = src.substr(i + 1, j - i - 1);
      adv(j - i + 1);
    }
    else
    {
      if (src.compare(i, 2, "**") == 0)
        t.text = "**";
      else if (std::string("+-*/^()[],=.").find(c) != std::string::npos)
        t.text = std::string(1, c);
      else
      {
        throw Error(ErrorKind::SyntaxError,
                    "unexpected character '" + std::string(1, c) + "'", line,
                    col);
      }
      if (t.text == "(" or t.text == "[")
        ++depth;
      else if (t.text == ")" or t.text == "]")
        depth = std::max(depth - 1, 0);
      adv(t.text.size());
    }
    out.push_back(t);
  }
  if (!out.empty() and out.back().kind != Tok::newline)
    out.push_back({Tok::newline, "\\n", 0.0, line, col});
  out.push_back({Tok::end, "", 0.0, line, col});
  return out;
}

struct Value
{
  enum Kind
  {
    t_none,
    t_number,
    t_string,
    t_element,
    t_cell,
    t_expr,
    t_form,
    t_measure,
    t_tuple,
    t_builtin
  } kind
      = t_none;
  double num = 0.0;
  /// string contents, builtin name, or parameter name of a named number
  std::string str;
  std::shared_ptr<const FiniteElement> element;
  cell::Type cell = cell::Type::triangle;
  Expr expr;
  Form form;
  Measure measure = Measure::cell;
  int subdomain = -1;
  std::vector<Value> items;
};

const std::set<std::string> builtins = {
    "FiniteElement", "VectorElement", "MixedElement", "TestFunction",
    "TrialFunction", "TestFunctions", "TrialFunctions", "Coefficient",
    "Function", "Constant", "VectorConstant", "Expression", "FacetNormal",
    "CellSize", "SpatialCoordinate", "grad", "div", "dot", "inner", "jump",
    "avg", "sin", "cos", "exp", "sqrt", "abs", "lhs", "rhs", "system",
    "derivative", "Dx"};

class Parser
{
public:
  explicit Parser(const std::string& text) : _tok(tokenize(text)) {}

  FormFile run()
  {
    while (peek().kind != Tok::end)
    {
      if (peek().kind == Tok::newline)
      {
        ++_p;
        continue;
      }
      const Token start = peek();
      try
      {
        statement();
      }
      catch (const Error& e)
      {
        if (e.line() != 0)
          throw;
        throw Error(e.kind(), e.message(), _last.line, _last.col);
      }
      (void)start;
    }
    return std::move(_file);
  }

private:
  std::vector<Token> _tok;
  std::size_t _p = 0;
  Token _last{Tok::end, "", 0.0, 0, 0};
  FormFile _file;
  bool _has_cell = false;
  std::map<std::string, Value> _vars;
  std::map<std::string, std::shared_ptr<const FiniteElement>> _element_cache;
  std::string _target;
  int _next_id = 0;

  const Token& peek(std::size_t k = 0) const
  {
    return _tok[std::min(_p + k, _tok.size() - 1)];
  }

  Token next()
  {
    _last = _tok[_p];
    if (_p + 1 < _tok.size())
      ++_p;
    return _last;
  }

  bool is_op(const char* s, std::size_t k = 0) const
  {
    return peek(k).kind == Tok::op and peek(k).text == s;
  }

  bool accept(const char* s)
  {
    if (is_op(s))
    {
      next();
      return true;
    }
    return false;
  }

  [[noreturn]] void syntax(const std::string& msg, const Token& t)
  {
    throw Error(ErrorKind::SyntaxError, msg, t.line, t.col);
  }

  void expect(const char* s)
  {
    if (!accept(s))
    {
      const Token& t = peek();
      syntax(std::string("expected '") + s + "' but found '"
                 + (t.kind == Tok::newline ? "end of line" : t.text) + "'",
             t);
    }
  }

  void end_statement()
  {
    if (peek().kind == Tok::newline)
      next();
    else if (peek().kind != Tok::end)
      syntax("unexpected '" + peek().text + "'", peek());
  }

  // -- statements ----------------------------------------------------------

  void statement()
  {
    const Token& t = peek();
    if (t.kind == Tok::ident and (t.text == "from" or t.text == "import"))
    {
      while (peek().kind != Tok::newline and peek().kind != Tok::end)
        next();
      end_statement();
      return;
    }
    if (t.kind == Tok::ident and t.text == "element" and peek(1).kind == Tok::ident)
      next();

    // collect targets
    std::vector<Token> targets;
    const std::size_t save = _p;
    bool paren = accept("(");
    while (peek().kind == Tok::ident)
    {
      targets.push_back(next());
      if (!accept(","))
        break;
    }
    if (paren and !accept(")"))
      targets.clear();
    if (targets.empty() or !is_op("="))
    {
      _p = save;
      syntax("expected an assignment", peek());
    }
    next(); // '='

    _target = targets.size() == 1 ? targets[0].text : "";
    Value v = expression();
    _target.clear();
    end_statement();

    if (targets.size() == 1)
      assign(targets[0], v);
    else
    {
      if (v.kind != Value::t_tuple or v.items.size() != targets.size())
      {
        throw Error(ErrorKind::ShapeMismatch,
                    "cannot unpack into " + std::to_string(targets.size())
                        + " names",
                    targets[0].line, targets[0].col);
      }
      for (std::size_t i = 0; i < targets.size(); ++i)
        assign(targets[i], v.items[i]);
    }
  }

  void assign(const Token& name, Value v)
  {
    if (v.kind == Value::t_number)
    {
      // plain numbers become named parameters
      v.str = name.text;
      _file.constants[name.text] = v.num;
    }
    if (v.kind == Value::t_element)
    {
      _file.elements.emplace_back(name.text, v.element);
    }
    if (v.kind == Value::t_form)
    {
      try
      {
        check_form(v.form);
      }
      catch (const Error& e)
      {
        throw Error(e.kind(), e.message(), name.line, name.col);
      }
      bool found = false;
      for (auto& [k, f] : _file.forms)
      {
        if (k == name.text)
        {
          f = v.form;
          found = true;
        }
      }
      if (!found)
        _file.forms.emplace_back(name.text, v.form);
    }
    _vars[name.text] = std::move(v);
  }

  // -- expressions ---------------------------------------------------------

  Value expression()
  {
    Value a = term();
    for (;;)
    {
      if (accept("+"))
        a = binary('+', a, term());
      else if (accept("-"))
        a = binary('-', a, term());
      else
        return a;
    }
  }

  Value term()
  {
    Value a = unary();
    for (;;)
    {
      if (accept("*"))
        a = binary('*', a, unary());
      else if (accept("/"))
        a = binary('/', a, unary());
      else
        return a;
    }
  }

  Value unary()
  {
    if (accept("-"))
    {
      Value a = unary();
      switch (a.kind)
      {
      case Value::t_number: a.num = -a.num; a.str.clear(); return a;
      case Value::t_form: a.form = -a.form; return a;
      default: return make_expr(negation(as_expr(a)));
      }
    }
    if (accept("+"))
      return unary();
    return power_();
  }

  Value power_()
  {
    Value a = postfix();
    if (accept("**") or accept("^"))
    {
      Value b = unary();
      if (b.kind != Value::t_number)
        syntax("exponent must be a number", _last);
      if (a.kind == Value::t_number and a.str.empty())
      {
        a.num = std::pow(a.num, b.num);
        return a;
      }
      return make_expr(power(as_expr(a), b.num));
    }
    return a;
  }

  Value postfix()
  {
    Value a = atom();
    for (;;)
    {
      if (is_op("("))
      {
        const Token open = next();
        std::vector<Value> args;
        std::map<std::string, Value> kwargs;
        if (!is_op(")"))
        {
          for (;;)
          {
            if (peek().kind == Tok::ident and is_op("=", 1))
            {
              const std::string k = next().text;
              next();
              kwargs[k] = expression();
            }
            else
              args.push_back(expression());
            if (!accept(","))
              break;
          }
        }
        expect(")");
        a = call_value(a, args, kwargs, open);
      }
      else if (is_op("["))
      {
        const Token open = next();
        Value idx = expression();
        expect("]");
        if (idx.kind != Value::t_number)
          syntax("index must be an integer", open);
        const int k = static_cast<int>(idx.num);
        if (a.kind == Value::t_tuple)
        {
          if (k < 0 or k >= static_cast<int>(a.items.size()))
            throw Error(ErrorKind::ShapeMismatch, "tuple index out of range");
          Value item = a.items[static_cast<std::size_t>(k)];
          a = item;
        }
        else
          a = make_expr(indexed(as_expr(a), k));
      }
      else if (is_op("."))
      {
        next();
        if (peek().kind != Tok::ident)
          syntax("expected attribute name", peek());
        const Token attr = next();
        if (a.kind != Value::t_cell)
          syntax("attribute access is only supported on cells", attr);
        const int gd = cell::topological_dimension(a.cell);
        if (attr.text == "n")
          a = make_expr(facet_normal(gd));
        else if (attr.text == "x")
          a = make_expr(spatial_coordinate(gd));
        else if (attr.text == "h")
          a = make_expr(cell_size(gd));
        else
        {
          throw Error(ErrorKind::UnknownIdentifier,
                      "unknown cell attribute '" + attr.text + "'", attr.line,
                      attr.col);
        }
      }
      else
        return a;
    }
  }

  Value atom()
  {
    const Token t = next();
    Value v;
    switch (t.kind)
    {
    case Tok::number:
      v.kind = Value::t_number;
      v.num = t.number;
      return v;
    case Tok::string:
      v.kind = Value::t_string;
      v.str = t.text;
      return v;
    case Tok::ident: return identifier(t);
    case Tok::op:
      if (t.text == "(")
      {
        std::vector<Value> items{expression()};
        bool tuple = false;
        while (accept(","))
        {
          tuple = true;
          if (is_op(")"))
            break;
          items.push_back(expression());
        }
        expect(")");
        if (!tuple)
          return items[0];
        v.kind = Value::t_tuple;
        v.items = std::move(items);
        return v;
      }
      if (t.text == "[")
      {
        v.kind = Value::t_tuple;
        if (!is_op("]"))
        {
          do
          {
            if (is_op("]"))
              break;
            v.items.push_back(expression());
          } while (accept(","));
        }
        expect("]");
        return v;
      }
      [[fallthrough]];
    default:
      syntax(t.kind == Tok::newline ? "unexpected end of line"
                                    : "unexpected '" + t.text + "'",
             t);
    }
  }

  int file_gdim(const Token& t) const
  {
    if (!_has_cell)
    {
      throw Error(ErrorKind::UnknownIdentifier,
                  "'" + t.text + "' used before any element is declared",
                  t.line, t.col);
    }
    return cell::topological_dimension(_file.cell);
  }

  Value identifier(const Token& t)
  {
    const std::string& name = t.text;
    if (auto it = _vars.find(name); it != _vars.end())
      return it->second;
    Value v;
    if (name == "interval" or name == "triangle" or name == "tetrahedron")
    {
      v.kind = Value::t_cell;
      v.cell = cell::from_string(name);
      return v;
    }
    if (name == "mesh" or name == "cell")
    {
      file_gdim(t);
      v.kind = Value::t_cell;
      v.cell = _file.cell;
      return v;
    }
    if (name == "dx" or name == "ds" or name == "dS")
    {
      v.kind = Value::t_measure;
      v.measure = name == "dx"   ? Measure::cell
                  : name == "ds" ? Measure::exterior_facet
                                 : Measure::interior_facet;
      return v;
    }
    if (name == "pi")
    {
      v.kind = Value::t_number;
      v.num = std::numbers::pi;
      return v;
    }
    if (builtins.count(name))
    {
      // geometric quantities may be used without a call
      if (!is_op("("))
      {
        if (name == "FacetNormal")
          return make_expr(facet_normal(file_gdim(t)));
        if (name == "CellSize")
          return make_expr(cell_size(file_gdim(t)));
        if (name == "SpatialCoordinate")
          return make_expr(spatial_coordinate(file_gdim(t)));
      }
      v.kind = Value::t_builtin;
      v.str = name;
      return v;
    }
    throw Error(ErrorKind::UnknownIdentifier, "unknown identifier '" + name + "'",
                t.line, t.col);
  }

  // -- helpers -------------------------------------------------------------

  static Value make_expr(Expr e)
  {
    Value v;
    v.kind = Value::t_expr;
    v.expr = std::move(e);
    return v;
  }

  static Value make_form(Form f)
  {
    Value v;
    v.kind = Value::t_form;
    v.form = std::move(f);
    return v;
  }

  Expr as_expr(const Value& v)
  {
    switch (v.kind)
    {
    case Value::t_expr: return v.expr;
    case Value::t_number: return constant(v.num, v.str);
    case Value::t_tuple:
      throw Error(ErrorKind::ShapeMismatch,
                  "tuples cannot be used as expressions");
    default:
      throw Error(ErrorKind::ShapeMismatch,
                  "value cannot be used in an expression");
    }
  }

  std::shared_ptr<const FiniteElement> element_for(const ElementDescriptor& d)
  {
    const std::string key = d.str();
    auto it = _element_cache.find(key);
    if (it != _element_cache.end())
      return it->second;
    auto e = std::make_shared<FiniteElement>(d);
    _element_cache[key] = e;
    if (!_has_cell)
    {
      _has_cell = true;
      _file.cell = e->cell_type();
    }
    else if (e->cell_type() != _file.cell)
    {
      throw Error(ErrorKind::ShapeMismatch,
                  "elements on different cells in one file");
    }
    return e;
  }

  Value binary(char op, const Value& a, const Value& b)
  {
    const bool plain_a = a.kind == Value::t_number and a.str.empty();
    const bool plain_b = b.kind == Value::t_number and b.str.empty();
    if (plain_a and plain_b)
    {
      Value r = a;
      switch (op)
      {
      case '+': r.num = a.num + b.num; break;
      case '-': r.num = a.num - b.num; break;
      case '*': r.num = a.num * b.num; break;
      default: r.num = a.num / b.num; break;
      }
      return r;
    }
    if (a.kind == Value::t_element and b.kind == Value::t_element and op == '+')
    {
      std::vector<ElementDescriptor> parts;
      for (const auto* e : {&a, &b})
      {
        const auto& d = e->element->descriptor();
        if (d.family == Family::Mixed)
          parts.insert(parts.end(), d.sub.begin(), d.sub.end());
        else
          parts.push_back(d);
      }
      Value r;
      r.kind = Value::t_element;
      r.element = element_for(ElementDescriptor::mixed(parts));
      return r;
    }
    if (a.kind == Value::t_form or b.kind == Value::t_form)
    {
      if (a.kind == Value::t_form and b.kind == Value::t_form)
      {
        if (op == '+')
          return make_form(a.form + b.form);
        if (op == '-')
          return make_form(a.form - b.form);
      }
      if (op == '*' and b.kind == Value::t_form)
        return make_form(as_expr(a) * b.form);
      if (op == '*' and a.kind == Value::t_form)
        return make_form(as_expr(b) * a.form);
      if (op == '/' and a.kind == Value::t_form)
        return make_form(division(constant(1.0), as_expr(b)) * a.form);
      throw Error(ErrorKind::ShapeMismatch,
                  std::string("unsupported operation '") + op + "' on a form");
    }
    if (b.kind == Value::t_measure)
    {
      if (op != '*')
        throw Error(ErrorKind::SyntaxError, "measures can only multiply");
      return make_form(integrate(as_expr(a), b.measure, b.subdomain));
    }
    const Expr x = as_expr(a), y = as_expr(b);
    switch (op)
    {
    case '+': return make_expr(sum(x, y));
    case '-': return make_expr(difference(x, y));
    case '*': return make_expr(product(x, y));
    default: return make_expr(division(x, y));
    }
  }

  int int_arg(const Value& v, const char* what)
  {
    if (v.kind != Value::t_number or v.num != std::floor(v.num))
      throw Error(ErrorKind::SyntaxError, std::string(what) + " must be an integer");
    return static_cast<int>(v.num);
  }

  std::shared_ptr<const FiniteElement> element_arg(const Value& v)
  {
    if (v.kind != Value::t_element)
      throw Error(ErrorKind::ShapeMismatch, "expected an element");
    return v.element;
  }

  std::string declared_name()
  {
    std::string n = _target;
    _target.clear();
    if (n.empty())
      n = "w" + std::to_string(_next_id);
    return n;
  }

  void nargs(const std::vector<Value>& args, std::size_t lo, std::size_t hi,
             const std::string& fn)
  {
    if (args.size() < lo or args.size() > hi)
    {
      throw Error(ErrorKind::SyntaxError,
                  fn + " takes " + std::to_string(lo)
                      + (hi != lo ? " to " + std::to_string(hi) : "")
                      + " arguments, got " + std::to_string(args.size()));
    }
  }

  Value call_value(const Value& f, const std::vector<Value>& args,
                   const std::map<std::string, Value>& kwargs,
                   const Token& at)
  {
    if (f.kind == Value::t_expr)
    {
      // restriction v('+')
      if (args.size() != 1 or args[0].kind != Value::t_string
          or (args[0].str != "+" and args[0].str != "-"))
      {
        syntax("expressions can only be called with '+' or '-'", at);
      }
      return make_expr(restrict(f.expr, args[0].str == "+" ? Side::plus : Side::minus));
    }
    if (f.kind == Value::t_measure)
    {
      nargs(args, 1, 1, "measure");
      Value m = f;
      m.subdomain = int_arg(args[0], "subdomain id");
      return m;
    }
    if (f.kind != Value::t_builtin)
      syntax("value is not callable", at);
    const std::string& fn = f.str;

    if (fn == "FiniteElement" or fn == "VectorElement")
    {
      nargs(args, 3, 4, fn);
      if (args[0].kind != Value::t_string)
        throw Error(ErrorKind::SyntaxError, "family must be a string");
      if (args[1].kind != Value::t_cell)
        throw Error(ErrorKind::SyntaxError, "expected a cell");
      auto d = ElementDescriptor::scalar(family_from_string(args[0].str),
                                         args[1].cell, int_arg(args[2], "degree"));
      if (fn == "VectorElement")
      {
        const int dim = args.size() == 4 ? int_arg(args[3], "dim")
                                         : cell::topological_dimension(args[1].cell);
        d = ElementDescriptor::vector(d, dim);
      }
      else if (args.size() == 4)
        throw Error(ErrorKind::SyntaxError, "FiniteElement takes 3 arguments");
      Value r;
      r.kind = Value::t_element;
      r.element = element_for(d);
      return r;
    }
    if (fn == "MixedElement")
    {
      std::vector<Value> parts = args;
      if (args.size() == 1 and args[0].kind == Value::t_tuple)
        parts = args[0].items;
      if (parts.size() < 2)
        throw Error(ErrorKind::SyntaxError, "MixedElement needs two or more elements");
      std::vector<ElementDescriptor> d;
      for (const auto& p : parts)
        d.push_back(element_arg(p)->descriptor());
      Value r;
      r.kind = Value::t_element;
      r.element = element_for(ElementDescriptor::mixed(d));
      return r;
    }
    if (fn == "TestFunction" or fn == "TrialFunction")
    {
      nargs(args, 1, 1, fn);
      return make_expr(argument(fn == "TestFunction" ? 0 : 1, element_arg(args[0])));
    }
    if (fn == "TestFunctions" or fn == "TrialFunctions")
    {
      nargs(args, 1, 1, fn);
      Value r;
      r.kind = Value::t_tuple;
      for (const auto& e :
           split_argument(fn == "TestFunctions" ? 0 : 1, element_arg(args[0])))
        r.items.push_back(make_expr(e));
      return r;
    }
    if (fn == "Coefficient" or fn == "Function")
    {
      nargs(args, 1, 1, fn);
      auto e = element_arg(args[0]);
      CoefficientDecl c;
      c.id = _next_id++;
      c.name = declared_name();
      c.element = e;
      c.degree = e->degree();
      c.expr = coefficient(c.id, c.name, e);
      c.shape = c.expr->shape;
      _file.coefficients.push_back(c);
      return make_expr(c.expr);
    }
    if (fn == "Constant" or fn == "VectorConstant")
    {
      nargs(args, 1, 1, fn);
      if (fn == "Constant" and args[0].kind == Value::t_number)
      {
        Value r = args[0];
        r.str = declared_name();
        return make_expr(constant(r.num, r.str));
      }
      if (args[0].kind != Value::t_cell)
        throw Error(ErrorKind::SyntaxError, fn + " expects a number or a cell");
      const int gd = cell::topological_dimension(args[0].cell);
      CoefficientDecl c;
      c.id = _next_id++;
      c.name = declared_name();
      c.shape = fn == "Constant" ? std::vector<int>{} : std::vector<int>{gd};
      c.degree = 0;
      c.expr = point_coefficient(c.id, c.name, c.shape, 0, gd);
      _file.coefficients.push_back(c);
      return make_expr(c.expr);
    }
    if (fn == "Expression")
    {
      nargs(args, 1, 1, fn);
      std::vector<std::string> comps;
      if (args[0].kind == Value::t_string)
        comps = {args[0].str};
      else if (args[0].kind == Value::t_tuple)
      {
        for (const auto& it : args[0].items)
        {
          if (it.kind != Value::t_string)
            throw Error(ErrorKind::SyntaxError, "expression components must be strings");
          comps.push_back(it.str);
        }
      }
      else
        throw Error(ErrorKind::SyntaxError, "Expression expects a string or tuple");
      if (comps.size() == 1)
        comps = split_tuple(comps[0]);
      int degree = 2;
      for (const auto& [k, v] : kwargs)
      {
        if (k != "degree")
          throw Error(ErrorKind::SyntaxError, "unknown keyword '" + k + "'");
        degree = int_arg(v, "degree");
      }
      CoefficientDecl c;
      c.id = _next_id++;
      c.name = declared_name();
      c.expression = comps;
      c.degree = degree;
      if (comps.size() > 1)
        c.shape = {static_cast<int>(comps.size())};
      c.expr = point_coefficient(c.id, c.name, c.shape, degree, file_gdim(at));
      _file.coefficients.push_back(c);
      return make_expr(c.expr);
    }
    if (!kwargs.empty())
      throw Error(ErrorKind::SyntaxError, fn + " takes no keyword arguments");
    if (fn == "FacetNormal" or fn == "CellSize" or fn == "SpatialCoordinate")
    {
      nargs(args, 1, 1, fn);
      if (args[0].kind != Value::t_cell)
        throw Error(ErrorKind::SyntaxError, fn + " expects a cell or mesh");
      const int gd = cell::topological_dimension(args[0].cell);
      if (fn == "FacetNormal")
        return make_expr(facet_normal(gd));
      if (fn == "CellSize")
        return make_expr(cell_size(gd));
      return make_expr(spatial_coordinate(gd));
    }
    if (fn == "grad" or fn == "div" or fn == "avg")
    {
      nargs(args, 1, 1, fn);
      const Expr e = as_expr(args[0]);
      return make_expr(fn == "grad" ? grad(e) : fn == "div" ? div(e) : avg(e));
    }
    if (fn == "dot" or fn == "inner")
    {
      nargs(args, 2, 2, fn);
      const Expr a = as_expr(args[0]), b = as_expr(args[1]);
      return make_expr(fn == "dot" ? dot(a, b) : inner(a, b));
    }
    if (fn == "Dx")
    {
      nargs(args, 2, 2, fn);
      return make_expr(indexed(grad(as_expr(args[0])), int_arg(args[1], "direction")));
    }
    if (fn == "jump")
    {
      nargs(args, 1, 2, fn);
      if (args.size() == 1)
        return make_expr(jump(as_expr(args[0])));
      return make_expr(jump(as_expr(args[0]), as_expr(args[1])));
    }
    if (fn == "sin" or fn == "cos" or fn == "exp" or fn == "sqrt" or fn == "abs")
    {
      nargs(args, 1, 1, fn);
      if (args[0].kind == Value::t_number and args[0].str.empty())
      {
        Value r = args[0];
        const double x = r.num;
        r.num = fn == "sin"   ? std::sin(x)
                : fn == "cos" ? std::cos(x)
                : fn == "exp" ? std::exp(x)
                : fn == "sqrt" ? std::sqrt(x)
                               : std::abs(x);
        return r;
      }
      const MathFunction m = fn == "sin"   ? MathFunction::sin
                             : fn == "cos" ? MathFunction::cos
                             : fn == "exp" ? MathFunction::exp
                             : fn == "sqrt" ? MathFunction::sqrt
                                            : MathFunction::abs;
      return make_expr(call(m, as_expr(args[0])));
    }
    if (fn == "lhs" or fn == "rhs" or fn == "system")
    {
      nargs(args, 1, 1, fn);
      if (args[0].kind != Value::t_form)
        throw Error(ErrorKind::SyntaxError, fn + " expects a form");
      if (fn == "lhs")
        return make_form(lhs(args[0].form));
      if (fn == "rhs")
        return make_form(rhs(args[0].form));
      Value r;
      r.kind = Value::t_tuple;
      r.items = {make_form(lhs(args[0].form)), make_form(rhs(args[0].form))};
      return r;
    }
    if (fn == "derivative")
    {
      nargs(args, 2, 3, fn);
      if (args[0].kind != Value::t_form)
        throw Error(ErrorKind::SyntaxError, "derivative expects a form");
      const Expr u = as_expr(args[1]);
      if (args.size() == 3)
        return make_form(derivative(args[0].form, u, as_expr(args[2])));
      return make_form(derivative(args[0].form, u));
    }
    syntax("'" + fn + "' cannot be called here", at);
  }
};
} // namespace

//-----------------------------------------------------------------------------
bool FormFile::has_form(const std::string& name) const
{
  for (const auto& [k, f] : forms)
    if (k == name)
      return true;
  return false;
}
//-----------------------------------------------------------------------------
const Form& FormFile::form(const std::string& name) const
{
  for (const auto& [k, f] : forms)
    if (k == name)
      return f;
  throw Error(ErrorKind::UnknownIdentifier, "no form named '" + name + "'");
}
//-----------------------------------------------------------------------------
const CoefficientDecl* FormFile::coefficient(const std::string& name) const
{
  for (const auto& c : coefficients)
    if (c.name == name)
      return &c;
  return nullptr;
}
//-----------------------------------------------------------------------------
std::shared_ptr<const FiniteElement>
FormFile::element(const std::string& name) const
{
  for (const auto& [k, e] : elements)
    if (k == name)
      return e;
  throw Error(ErrorKind::UnknownIdentifier, "no element named '" + name + "'");
}
//-----------------------------------------------------------------------------
FormFile fl::parse_form_file(const std::string& text)
{
  return Parser(text).run();
}
//-----------------------------------------------------------------------------
FormFile fl::read_form_file(const std::string& path)
{
  std::ifstream in(path);
  if (!in)
    throw Error(ErrorKind::IoError, "cannot read '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  try
  {
    return parse_form_file(ss.str());
  }
  catch (const Error& e)
  {
    throw Error(e.kind(), path + ": " + e.message(), e.line(), e.column());
  }
}
//-----------------------------------------------------------------------------
