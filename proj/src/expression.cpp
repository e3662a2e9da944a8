// Copyright (c) 2026 femkit contributors
// SPDX-License-Identifier:    MIT

#include <femkit/error.h>
#include <femkit/expression.h>

#include <cctype>
#include <cmath>
#include <numbers>

using namespace femkit;

namespace
{
enum Code
{
  k_const,
  k_x,
  k_param,
  k_neg,
  k_add,
  k_sub,
  k_mul,
  k_div,
  k_pow,
  k_sin,
  k_cos,
  k_exp,
  k_sqrt,
  k_abs
};
} // namespace

namespace femkit
{
// Recursive-descent parser emitting postfix code.
class ProgramBuilder
{
public:
  ProgramBuilder(ScalarProgram& p, const std::string& s, int gdim,
                 const std::vector<std::string>& params)
      : _p(p), _s(s), _gdim(gdim), _params(params)
  {
  }

  void run()
  {
    expr();
    skip();
    if (_i != _s.size())
      fail("unexpected '" + std::string(1, _s[_i]) + "'");
  }

private:
  ScalarProgram& _p;
  const std::string& _s;
  int _gdim;
  const std::vector<std::string>& _params;
  std::size_t _i = 0;
  int _depth = 0;

  [[noreturn]] void fail(const std::string& msg)
  {
    throw Error(ErrorKind::SyntaxError,
                "in expression '" + _s + "': " + msg, 1,
                static_cast<int>(_i) + 1);
  }

  void skip()
  {
    while (_i < _s.size() and std::isspace(static_cast<unsigned char>(_s[_i])))
      ++_i;
  }

  bool accept(const char* tok)
  {
    skip();
    const std::size_t n = std::char_traits<char>::length(tok);
    if (_s.compare(_i, n, tok) == 0)
    {
      _i += n;
      return true;
    }
    return false;
  }

  void expect(const char* tok)
  {
    if (!accept(tok))
      fail(std::string("expected '") + tok + "'");
  }

  void emit(int op, double v = 0.0, int idx = 0, int push = 0)
  {
    _p._code.push_back({op, v, idx});
    _depth += push;
    _p._stack = std::max(_p._stack, _depth);
  }

  void expr()
  {
    term();
    for (;;)
    {
      if (accept("+"))
      {
        term();
        emit(k_add, 0, 0, -1);
      }
      else if (accept("-"))
      {
        term();
        emit(k_sub, 0, 0, -1);
      }
      else
        return;
    }
  }

  void term()
  {
    unary();
    for (;;)
    {
      skip();
      if (_s.compare(_i, 2, "**") == 0)
        return;
      if (accept("*"))
      {
        unary();
        emit(k_mul, 0, 0, -1);
      }
      else if (accept("/"))
      {
        unary();
        emit(k_div, 0, 0, -1);
      }
      else
        return;
    }
  }

  void unary()
  {
    if (accept("-"))
    {
      unary();
      emit(k_neg);
    }
    else if (accept("+"))
      unary();
    else
      power();
  }

  void power()
  {
    atom();
    if (accept("^") or accept("**"))
    {
      unary();
      emit(k_pow, 0, 0, -1);
    }
  }

  void atom()
  {
    skip();
    if (_i >= _s.size())
      fail("unexpected end of expression");
    const char c = _s[_i];
    if (std::isdigit(static_cast<unsigned char>(c)) or c == '.')
    {
      const char* begin = _s.c_str() + _i;
      char* end = nullptr;
      const double v = std::strtod(begin, &end);
      if (end == begin)
        fail("bad number");
      _i += static_cast<std::size_t>(end - begin);
      emit(k_const, v, 0, 1);
      return;
    }
    if (accept("("))
    {
      expr();
      expect(")");
      return;
    }
    if (std::isalpha(static_cast<unsigned char>(c)) or c == '_')
    {
      const std::size_t start = _i;
      while (_i < _s.size()
             and (std::isalnum(static_cast<unsigned char>(_s[_i])) or _s[_i] == '_'))
        ++_i;
      const std::string name = _s.substr(start, _i - start);
      if (name == "x")
      {
        expect("[");
        skip();
        const std::size_t s0 = _i;
        while (_i < _s.size() and std::isdigit(static_cast<unsigned char>(_s[_i])))
          ++_i;
        if (s0 == _i)
          fail("expected component index");
        const int k = std::stoi(_s.substr(s0, _i - s0));
        if (k >= _gdim)
        {
          _i = s0;
          fail("x[" + std::to_string(k) + "] in dimension "
               + std::to_string(_gdim));
        }
        expect("]");
        emit(k_x, 0, k, 1);
        return;
      }
      if (name == "pi")
      {
        emit(k_const, std::numbers::pi, 0, 1);
        return;
      }
      static const std::pair<const char*, int> fns[]
          = {{"sin", k_sin}, {"cos", k_cos}, {"exp", k_exp},
             {"sqrt", k_sqrt}, {"abs", k_abs}};
      for (const auto& [fn, code] : fns)
      {
        if (name == fn)
        {
          expect("(");
          expr();
          expect(")");
          emit(code);
          return;
        }
      }
      for (std::size_t p = 0; p < _params.size(); ++p)
      {
        if (_params[p] == name)
        {
          emit(k_param, 0, static_cast<int>(p), 1);
          return;
        }
      }
      throw Error(ErrorKind::UnknownIdentifier,
                  "unknown identifier '" + name + "' in expression '" + _s
                      + "'",
                  1, static_cast<int>(start) + 1);
    }
    fail("unexpected '" + std::string(1, c) + "'");
  }
};
} // namespace femkit

//-----------------------------------------------------------------------------
ScalarProgram::ScalarProgram(const std::string& text, int gdim,
                             const std::vector<std::string>& params)
    : _text(text)
{
  ProgramBuilder(*this, _text, gdim, params).run();
}
//-----------------------------------------------------------------------------
double ScalarProgram::eval(const double* x, const double* params) const
{
  double small[32] = {};
  std::vector<double> big;
  double* st = small;
  if (_stack > 32)
  {
    big.resize(_stack);
    st = big.data();
  }
  int top = -1;
  for (const auto& in : _code)
  {
    switch (in.op)
    {
    case k_const: st[++top] = in.value; break;
    case k_x: st[++top] = x[in.index]; break;
    case k_param: st[++top] = params[in.index]; break;
    case k_neg: st[top] = -st[top]; break;
    case k_add: --top; st[top] += st[top + 1]; break;
    case k_sub: --top; st[top] -= st[top + 1]; break;
    case k_mul: --top; st[top] *= st[top + 1]; break;
    case k_div: --top; st[top] /= st[top + 1]; break;
    case k_pow: --top; st[top] = std::pow(st[top], st[top + 1]); break;
    case k_sin: st[top] = std::sin(st[top]); break;
    case k_cos: st[top] = std::cos(st[top]); break;
    case k_exp: st[top] = std::exp(st[top]); break;
    case k_sqrt: st[top] = std::sqrt(st[top]); break;
    case k_abs: st[top] = std::abs(st[top]); break;
    }
  }
  return st[0];
}
//-----------------------------------------------------------------------------
std::vector<std::string> femkit::split_tuple(const std::string& text)
{
  std::size_t a = text.find_first_not_of(" \t\n");
  std::size_t b = text.find_last_not_of(" \t\n");
  if (a == std::string::npos or text[a] != '(' or text[b] != ')')
    return {text};
  // the outer parentheses must enclose everything
  int depth = 0;
  std::vector<std::string> parts;
  std::string cur;
  for (std::size_t i = a + 1; i < b; ++i)
  {
    const char c = text[i];
    if (c == '(' or c == '[')
      ++depth;
    else if (c == ')' or c == ']')
    {
      if (--depth < 0)
        return {text};
    }
    if (c == ',' and depth == 0)
    {
      parts.push_back(cur);
      cur.clear();
    }
    else
      cur += c;
  }
  if (parts.empty())
    return {text};
  parts.push_back(cur);
  return parts;
}
//-----------------------------------------------------------------------------
Expression::Expression(const std::vector<std::string>& components, int gdim,
                       int degree, int expected_size,
                       const std::map<std::string, double>& params)
    : _gdim(gdim), _degree(degree)
{
  _sources = components;
  if (_sources.size() == 1)
    _sources = split_tuple(_sources[0]);
  if (_sources.empty())
    throw Error(ErrorKind::BadComponentCount, "expression without components");
  if (expected_size >= 0 and static_cast<int>(_sources.size()) != expected_size)
  {
    throw Error(ErrorKind::BadComponentCount,
                "expression has " + std::to_string(_sources.size())
                    + " components, expected " + std::to_string(expected_size));
  }
  for (const auto& [k, v] : params)
  {
    _param_names.push_back(k);
    _param_values.push_back(v);
  }
  for (const auto& s : _sources)
    _programs.emplace_back(s, gdim, _param_names);
  _size = static_cast<int>(_sources.size());
}
//-----------------------------------------------------------------------------
Expression::Expression(Callable f, int value_size, int gdim, int degree)
    : _size(value_size), _gdim(gdim), _degree(degree), _callable(std::move(f))
{
}
//-----------------------------------------------------------------------------
std::shared_ptr<Expression> Expression::constant(std::vector<double> values,
                                                 int gdim)
{
  const int n = static_cast<int>(values.size());
  return std::make_shared<Expression>(
      [values](const double*, double* out)
      { std::copy(values.begin(), values.end(), out); },
      n, gdim, 0);
}
//-----------------------------------------------------------------------------
void Expression::eval(std::span<const double> x, std::span<double> values) const
{
  if (_callable)
  {
    _callable(x.data(), values.data());
    return;
  }
  for (int i = 0; i < _size; ++i)
    values[i] = _programs[i].eval(x.data(), _param_values.data());
}
//-----------------------------------------------------------------------------
void Expression::set_parameter(const std::string& name, double value)
{
  for (std::size_t i = 0; i < _param_names.size(); ++i)
  {
    if (_param_names[i] == name)
    {
      _param_values[i] = value;
      return;
    }
  }
  throw Error(ErrorKind::UnknownIdentifier, "no parameter '" + name + "'");
}
//-----------------------------------------------------------------------------
double Expression::parameter(const std::string& name) const
{
  for (std::size_t i = 0; i < _param_names.size(); ++i)
    if (_param_names[i] == name)
      return _param_values[i];
  throw Error(ErrorKind::UnknownIdentifier, "no parameter '" + name + "'");
}
//-----------------------------------------------------------------------------
