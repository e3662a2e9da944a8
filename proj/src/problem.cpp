// Copyright (c) 2026 femkit contributors
// SPDX-License-Identifier:    MIT

#include <femkit/error.h>
#include <femkit/form_parser.h>
#include <femkit/io.h>
#include <femkit/log.h>
#include <femkit/problem.h>

#include <nlohmann/json.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

using namespace femkit;
namespace fs = std::filesystem;
using json = nlohmann::json;

namespace
{
constexpr double region_tol = 1e-10;

[[noreturn]] void bad(const std::string& msg)
{
  throw Error(ErrorKind::SchemaMismatch, "descriptor: " + msg);
}

struct Clause
{
  enum Kind
  {
    boundary,
    everywhere,
    compare
  } kind
      = everywhere;
  std::shared_ptr<ScalarProgram> lhs, rhs;
  std::string op;

  bool eval(std::span<const double> x, bool on_boundary) const
  {
    switch (kind)
    {
    case boundary: return on_boundary;
    case everywhere: return true;
    default: break;
    }
    const double a = lhs->eval(x.data()), b = rhs->eval(x.data());
    if (op == "=" or op == "==")
      return near(a, b, region_tol);
    if (op == "<" or op == "<=")
      return a <= b + region_tol;
    return a >= b - region_tol;
  }
};

std::string trim(const std::string& s)
{
  const auto b = s.find_first_not_of(" \t\n");
  if (b == std::string::npos)
    return "";
  return s.substr(b, s.find_last_not_of(" \t\n") - b + 1);
}

Clause parse_clause(const std::string& text, int gdim)
{
  const std::string s = trim(text);
  Clause c;
  if (s == "on_boundary" or s == "boundary")
  {
    c.kind = Clause::boundary;
    return c;
  }
  if (s == "everywhere")
    return c;
  int depth = 0;
  for (std::size_t i = 0; i < s.size(); ++i)
  {
    const char ch = s[i];
    if (ch == '(' or ch == '[')
      ++depth;
    else if (ch == ')' or ch == ']')
      --depth;
    else if (depth == 0 and (ch == '<' or ch == '>' or ch == '='))
    {
      std::size_t len = (i + 1 < s.size() and s[i + 1] == '=') ? 2 : 1;
      c.kind = Clause::compare;
      c.op = s.substr(i, len);
      c.lhs = std::make_shared<ScalarProgram>(trim(s.substr(0, i)), gdim);
      c.rhs = std::make_shared<ScalarProgram>(trim(s.substr(i + len)), gdim);
      return c;
    }
  }
  throw Error(ErrorKind::SyntaxError,
              "region clause '" + s + "' is not on_boundary or a comparison");
}

std::string num(double v)
{
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

/// Expression strings that refer to the time parameter.
bool uses_time(const Expression& e)
{
  for (const auto& s : e.components())
  {
    try
    {
      ScalarProgram(s, e.gdim());
    }
    catch (const Error&)
    {
      return true;
    }
  }
  return false;
}

fs::path resolve(const fs::path& base, const std::string& p)
{
  fs::path q(p);
  return q.is_absolute() ? q : base / q;
}

int value_size_of(const std::vector<int>& shape)
{
  int n = 1;
  for (int s : shape)
    n *= s;
  return n;
}

/// Descriptor state shared by the drivers.
class Runner
{
public:
  Runner(json d, fs::path base, problem::RunOptions opt)
      : _d(std::move(d)), _base(std::move(base)), _opt(std::move(opt))
  {
  }

  problem::RunResult run();

private:
  json _d;
  fs::path _base;
  problem::RunOptions _opt;

  std::shared_ptr<Mesh> _mesh;
  std::optional<MeshFunction<int>> _facet_markers, _cell_markers;
  fl::FormFile _file;
  Bindings _bindings;
  AssemblyOptions _assembly;
  la::SolverOptions _solver;
  std::optional<la::Method> _method;
  /// expressions carrying the time parameter, by coefficient name
  std::map<std::string, std::shared_ptr<Expression>> _timed;
  std::vector<std::shared_ptr<Expression>> _bc_values;

  void load_mesh();
  void load_forms();
  void bind(const std::set<std::string>& skip);
  void solver_options();
  std::shared_ptr<Expression> expression(const json& v, int size, int degree,
                                         const std::string& what);
  std::shared_ptr<const GenericFunction>
  coefficient_value(const json& v, const fl::CoefficientDecl& decl);
  std::vector<DirichletBC> bcs(std::shared_ptr<const FunctionSpace> V);
  std::shared_ptr<const FunctionSpace> test_space(const fl::Form& a) const;
  const fl::Form& form(const std::string& name) const;
  la::Method pick_method(const fl::Form& a, std::size_t n) const;
  void initial(Function& u, const json& v);
  void write(problem::RunResult& r, const std::string& path, const Function& u,
             const std::string& name);
  void save(problem::RunResult& r, const Function& u);

  problem::RunResult linear();
  problem::RunResult nonlinear();
  problem::RunResult transient();
};
} // namespace

//-----------------------------------------------------------------------------
Region problem::parse_region(const std::string& text, int gdim)
{
  // split into words so "or"/"and" are recognized only as separate tokens
  std::vector<std::vector<Clause>> any;
  std::vector<Clause> all;
  std::string current;
  std::istringstream in(text);
  std::string word;
  auto flush = [&]()
  {
    if (trim(current).empty())
      throw Error(ErrorKind::SyntaxError, "empty clause in region '" + text + "'");
    all.push_back(parse_clause(current, gdim));
    current.clear();
  };
  while (in >> word)
  {
    if (word == "or" or word == "||")
    {
      flush();
      any.push_back(std::move(all));
      all.clear();
    }
    else if (word == "and" or word == "&&")
      flush();
    else
      current += " " + word;
  }
  flush();
  any.push_back(std::move(all));

  return [any](std::span<const double> x, bool on_boundary)
  {
    for (const auto& conj : any)
    {
      bool ok = true;
      for (const auto& c : conj)
        if (!c.eval(x, on_boundary))
        {
          ok = false;
          break;
        }
      if (ok)
        return true;
    }
    return false;
  };
}
//-----------------------------------------------------------------------------
void Runner::load_mesh()
{
  std::optional<fs::path> file;
  std::vector<io::Markers> markers;
  if (_opt.mesh)
    file = fs::path(*_opt.mesh);
  else if (!_d.contains("mesh"))
    bad("missing 'mesh'");
  else if (_d["mesh"].is_string())
    file = resolve(_base, _d["mesh"].get<std::string>());
  else if (_d["mesh"].contains("file"))
    file = resolve(_base, _d["mesh"]["file"].get<std::string>());

  const json m = _d.value("mesh", json::object());
  if (file)
  {
    _mesh = std::make_shared<Mesh>(io::read_mesh_xml(file->string()));
    markers = io::read_markers(file->string());
  }
  else
  {
    const std::string shape = m.value("generate", "");
    std::vector<std::size_t> n;
    if (m.contains("n") and m["n"].is_array())
      n = m["n"].get<std::vector<std::size_t>>();
    else if (m.contains("n"))
      n.push_back(m["n"].get<std::size_t>());
    UnitShape s;
    std::size_t dims;
    if (shape == "interval")
      s = UnitShape::interval, dims = 1;
    else if (shape == "square")
      s = UnitShape::square, dims = 2;
    else if (shape == "cube")
      s = UnitShape::cube, dims = 3;
    else
      bad("mesh.generate must be interval, square or cube");
    if (n.size() == 1)
      n.resize(dims, n[0]);
    _mesh = std::make_shared<Mesh>(generate_unit_mesh(s, n));
  }
  if (m.is_object() and m.contains("markers"))
  {
    auto more = io::read_markers(resolve(_base, m["markers"].get<std::string>()).string());
    markers.insert(markers.end(), more.begin(), more.end());
  }

  const int refinements = m.is_object() ? m.value("refine", 0) : 0;
  if (refinements > 0 and !markers.empty())
    throw Error(ErrorKind::Unsupported, "markers read from file cannot be carried through refinement");
  for (int i = 0; i < refinements; ++i)
    _mesh = std::make_shared<Mesh>(refine(*_mesh));

  const int tdim = _mesh->tdim();
  for (auto& mk : markers)
  {
    if (mk.values.size() != _mesh->num_entities(mk.values.dim()))
    {
      throw Error(ErrorKind::ShapeMismatch,
                  "marker block of dimension " + std::to_string(mk.values.dim()) + " has "
                      + std::to_string(mk.values.size()) + " entries");
    }
    if (mk.values.dim() == tdim - 1 and !_facet_markers)
      _facet_markers = std::move(mk.values);
    else if (mk.values.dim() == tdim and !_cell_markers)
      _cell_markers = std::move(mk.values);
  }

  // markers from regions: {"1": "x[0] = 0", ...}
  if (m.is_object() and m.contains("facet_markers"))
  {
    if (!_facet_markers)
      _facet_markers = MeshFunction<int>(*_mesh, tdim - 1, 0);
    const auto ext = exterior_facets(*_mesh);
    const auto& fv = _mesh->connectivity(tdim - 1, 0);
    for (const auto& [key, region_text] : m["facet_markers"].items())
    {
      const int id = std::stoi(key);
      const Region region = problem::parse_region(region_text.get<std::string>(), _mesh->gdim());
      for (std::size_t f = 0; f < fv.num_nodes(); ++f)
      {
        bool all = true;
        for (auto v : fv.links(f))
          all = all and region(_mesh->vertex(v), ext[f]);
        if (all)
          (*_facet_markers)[f] = id;
      }
    }
  }
  if (_facet_markers)
    _assembly.facet_markers = &*_facet_markers;
  if (_cell_markers)
    _assembly.cell_markers = &*_cell_markers;
}
//-----------------------------------------------------------------------------
void Runner::load_forms()
{
  if (!_d.contains("forms"))
    bad("missing 'forms'");
  _file = fl::read_form_file(resolve(_base, _d["forms"].get<std::string>()).string());
  if (cell::topological_dimension(_file.cell) != _mesh->tdim())
  {
    throw Error(ErrorKind::ShapeMismatch, "forms are written for " + cell::to_string(_file.cell)
                                              + " cells but the mesh has dimension "
                                              + std::to_string(_mesh->tdim()));
  }
}
//-----------------------------------------------------------------------------
std::shared_ptr<Expression> Runner::expression(const json& v, int size, int degree,
                                               const std::string& what)
{
  std::vector<std::string> parts;
  json src = v;
  if (v.is_object())
  {
    if (!v.contains("expression"))
      bad(what + ": object needs 'expression' or 'file'");
    src = v["expression"];
    degree = v.value("degree", degree);
  }
  if (src.is_number())
    parts.assign(static_cast<std::size_t>(size), num(src.get<double>()));
  else if (src.is_string())
    parts.push_back(src.get<std::string>());
  else if (src.is_array())
    for (const auto& c : src)
      parts.push_back(c.is_number() ? num(c.get<double>()) : c.get<std::string>());
  else
    bad(what + ": expected a number, a string or an array");
  return std::make_shared<Expression>(parts, _mesh->gdim(), degree, size,
                                      std::map<std::string, double>{{"t", 0.0}});
}
//-----------------------------------------------------------------------------
std::shared_ptr<const GenericFunction>
Runner::coefficient_value(const json& v, const fl::CoefficientDecl& decl)
{
  const int size = value_size_of(decl.shape);
  if (v.is_object() and v.contains("file"))
  {
    if (!decl.element)
      bad("coefficient '" + decl.name + "' has no element to read values into");
    auto V = std::make_shared<FunctionSpace>(_mesh, decl.element);
    auto f = std::make_shared<Function>(V);
    io::read_function_xml(*f, resolve(_base, v["file"].get<std::string>()).string());
    return f;
  }
  int degree = decl.degree > 0 ? decl.degree : 2;
  if (v.is_number())
    degree = 0;
  auto e = expression(v, size, degree, "coefficient '" + decl.name + "'");
  if (uses_time(*e))
    _timed[decl.name] = e;
  return e;
}
//-----------------------------------------------------------------------------
void Runner::bind(const std::set<std::string>& skip)
{
  const json given = _d.value("coefficients", json::object());
  for (const auto& [name, v] : given.items())
  {
    if (!_file.coefficient(name))
      throw Error(ErrorKind::UnknownIdentifier, "coefficient '" + name + "' is not declared in the forms file");
    if (skip.count(name))
      bad("coefficient '" + name + "' is set by the driver");
  }
  for (const auto& decl : _file.coefficients)
  {
    if (skip.count(decl.name))
      continue;
    if (given.contains(decl.name))
      _bindings.set(decl.name, coefficient_value(given[decl.name], decl));
    else if (!decl.expression.empty())
    {
      auto e = std::make_shared<Expression>(decl.expression, _mesh->gdim(),
                                            decl.degree > 0 ? decl.degree : 2,
                                            value_size_of(decl.shape),
                                            std::map<std::string, double>{{"t", 0.0}});
      if (uses_time(*e))
        _timed[decl.name] = e;
      _bindings.set(decl.name, e);
    }
  }
  const json constants = _d.value("constants", json::object());
  for (const auto& [name, v] : constants.items())
  {
    if (!_file.constants.count(name))
      throw Error(ErrorKind::UnknownIdentifier, "constant '" + name + "' is not declared in the forms file");
    _bindings.set(name, v.get<double>());
  }
}
//-----------------------------------------------------------------------------
void Runner::solver_options()
{
  const json s = _d.value("solver", json::object());
  if (s.contains("method") and s["method"] != "auto")
    _method = la::method_from_string(s["method"].get<std::string>());
  if (s.contains("precond"))
  {
    const std::string p = s["precond"];
    if (p == "none")
      _solver.precond = la::Preconditioner::none;
    else if (p == "jacobi")
      _solver.precond = la::Preconditioner::jacobi;
    else
      bad("solver.precond must be none or jacobi");
  }
  _solver.rtol = s.value("rtol", _solver.rtol);
  _solver.atol = s.value("atol", _solver.atol);
  _solver.maxit = s.value("maxit", _solver.maxit);
  if (_opt.method)
    _method = _opt.method;
  if (_opt.rtol)
    _solver.rtol = *_opt.rtol;
  if (_opt.maxit)
    _solver.maxit = *_opt.maxit;
  if (_opt.degree)
    _assembly.quadrature_degree = *_opt.degree;
  if (_opt.threads > 1)
  {
    _assembly.parallel = true;
    _assembly.threads = _opt.threads;
  }
}
//-----------------------------------------------------------------------------
std::vector<DirichletBC> Runner::bcs(std::shared_ptr<const FunctionSpace> V)
{
  std::vector<DirichletBC> out;
  const json list = _d.value("bcs", json::array());
  for (std::size_t i = 0; i < list.size(); ++i)
  {
    const json& b = list[i];
    const std::string what = "bcs[" + std::to_string(i) + "]";
    auto W = V;
    if (b.contains("subspace"))
    {
      std::vector<int> path;
      if (b["subspace"].is_array())
        path = b["subspace"].get<std::vector<int>>();
      else
        path.push_back(b["subspace"].get<int>());
      W = V->sub(path);
    }
    if (!b.contains("value"))
      bad(what + ": missing 'value'");
    auto g = expression(b["value"], W->element().value_size(), 2, what);
    _bc_values.push_back(g);
    if (b.contains("marker"))
    {
      if (!_facet_markers)
        bad(what + ": marker given but the mesh has no facet markers");
      out.emplace_back(W, g, *_facet_markers, b["marker"].get<int>());
      continue;
    }
    const std::string region = b.value("region", "on_boundary");
    const std::string method = b.value("method", "topological");
    DirichletBC::Method m;
    if (method == "topological")
      m = DirichletBC::Method::topological;
    else if (method == "pointwise")
      m = DirichletBC::Method::pointwise;
    else
      bad(what + ": method must be topological or pointwise");
    out.emplace_back(W, g, problem::parse_region(region, _mesh->gdim()), m);
  }
  return out;
}
//-----------------------------------------------------------------------------
const fl::Form& Runner::form(const std::string& name) const
{
  return _file.form(name);
}
//-----------------------------------------------------------------------------
std::shared_ptr<const FunctionSpace> Runner::test_space(const fl::Form& a) const
{
  const auto meta = fl::check_form(a);
  if (meta.arguments.empty() or !meta.arguments[0]->element)
    throw Error(ErrorKind::MixedRanks, "form has no test function");
  return std::make_shared<FunctionSpace>(_mesh, meta.arguments[0]->element);
}
//-----------------------------------------------------------------------------
la::Method Runner::pick_method(const fl::Form& a, std::size_t n) const
{
  if (_method)
    return *_method;
  if (fl::is_symmetric(a))
    return la::Method::cg;
  return n <= la::max_lu_size ? la::Method::lu : la::Method::bicgstab;
}
//-----------------------------------------------------------------------------
void Runner::initial(Function& u, const json& v)
{
  if (v.is_null())
    return;
  if (v.is_object() and v.contains("file"))
  {
    io::read_function_xml(u, resolve(_base, v["file"].get<std::string>()).string());
    return;
  }
  auto e = expression(v, u.value_size(), 2, "initial condition");
  u.interpolate(*e);
}
//-----------------------------------------------------------------------------
void Runner::write(problem::RunResult& r, const std::string& path, const Function& u,
                   const std::string& name)
{
  io::write_vtk(path, *_mesh, {{name, &u}});
  r.written.push_back(path);
}
//-----------------------------------------------------------------------------
void Runner::save(problem::RunResult& r, const Function& u)
{
  if (!_d.contains("save"))
    return;
  const json& s = _d["save"];
  if (s.is_string())
  {
    const auto p = resolve(_base, s.get<std::string>()).string();
    io::write_function_xml(u, p);
    r.written.push_back(p);
    return;
  }
  const auto parts = u.split();
  if (!s.is_array() or s.size() != parts.size())
    bad("save must be a path or one path per sub-function");
  for (std::size_t i = 0; i < parts.size(); ++i)
  {
    if (s[i].is_null())
      continue;
    const auto p = resolve(_base, s[i].get<std::string>()).string();
    io::write_function_xml(parts[i], p);
    r.written.push_back(p);
  }
}
//-----------------------------------------------------------------------------
problem::RunResult Runner::run()
{
  if (_d.value("schema", "") != "femkit-prob-1")
    throw Error(ErrorKind::SchemaMismatch, "descriptor schema is not femkit-prob-1");
  load_mesh();
  load_forms();
  solver_options();
  if (_d.contains("transient"))
    return transient();
  if (_d.contains("nonlinear"))
    return nonlinear();
  return linear();
}
//-----------------------------------------------------------------------------
problem::RunResult Runner::linear()
{
  bind({});
  const auto& a = form(_d.value("a", "a"));
  const auto& L = form(_d.value("L", "L"));
  auto V = test_space(a);
  problem::RunResult r;
  r.kind = "linear";
  r.mesh = _mesh;
  r.dofs = V->dim();
  VariationalProblem p(a, L, V, bcs(V));
  p.bindings = _bindings;
  p.assembly = _assembly;
  p.method = pick_method(a, V->dim());
  p.solver = _solver;
  r.solution = std::make_shared<Function>(V);
  const auto rep = p.solve(*r.solution);
  r.method = rep.method;
  r.residuals = {rep.linear_residual};
  if (_opt.out)
  {
    *_opt.out << "solved " << V->dim() << " unknowns with " << la::to_string(rep.method) << " ("
              << rep.linear_iterations << " iterations, residual " << rep.linear_residual << ")\n";
  }
  const std::string name = _d.value("name", "u");
  if (const auto out = _opt.output ? std::optional(*_opt.output)
                                   : (_d.contains("output") ? std::optional(resolve(_base, _d["output"]).string())
                                                            : std::nullopt))
    write(r, *out, *r.solution, name);
  save(r, *r.solution);
  return r;
}
//-----------------------------------------------------------------------------
problem::RunResult Runner::nonlinear()
{
  const json nl = _d["nonlinear"];
  const std::string unknown = nl.value("unknown", "u");
  const auto* decl = _file.coefficient(unknown);
  if (!decl)
    throw Error(ErrorKind::UnknownIdentifier, "unknown '" + unknown + "' is not declared in the forms file");
  if (!decl->element)
    bad("unknown '" + unknown + "' must be a Function or Coefficient on an element");
  bind({unknown});

  auto V = std::make_shared<FunctionSpace>(_mesh, decl->element);
  const auto& F = form(nl.value("residual", "L"));
  std::optional<fl::Form> J;
  if (nl.contains("jacobian"))
    J = form(nl["jacobian"].get<std::string>());
  auto p = VariationalProblem::nonlinear(F, unknown, V, bcs(V), J);
  p.bindings = _bindings;
  p.assembly = _assembly;
  p.method = _method;
  p.solver = _solver;
  const json nw = _d.value("newton", json::object());
  p.newton.atol = nw.value("atol", p.newton.atol);
  p.newton.rtol = nw.value("rtol", p.newton.rtol);
  p.newton.maxit = nw.value("maxit", p.newton.maxit);

  problem::RunResult r;
  r.kind = "nonlinear";
  r.mesh = _mesh;
  r.dofs = V->dim();
  r.solution = std::make_shared<Function>(V);
  initial(*r.solution, nl.value("initial", json()));
  const auto rep = p.solve(*r.solution);
  r.method = rep.method;
  r.newton_iterations = rep.newton_iterations;
  r.residuals = rep.residuals;
  if (_opt.out)
  {
    *_opt.out << "Newton converged in " << rep.newton_iterations << " iterations (residual "
              << (rep.residuals.empty() ? 0.0 : rep.residuals.back()) << ", " << V->dim()
              << " unknowns)\n";
  }
  const std::string name = _d.value("name", unknown);
  if (const auto out = _opt.output ? std::optional(*_opt.output)
                                   : (_d.contains("output") ? std::optional(resolve(_base, _d["output"]).string())
                                                            : std::nullopt))
    write(r, *out, *r.solution, name);
  save(r, *r.solution);
  return r;
}
//-----------------------------------------------------------------------------
problem::RunResult Runner::transient()
{
  const json tr = _d["transient"];
  if (!tr.contains("t_end") or !tr.contains("dt"))
    bad("transient needs t_end and dt");
  const double t_end = tr["t_end"], dt = tr["dt"];
  const double theta = tr.value("theta", 0.5);
  if (!(dt > 0.0) or !(t_end > 0.0))
    bad("transient t_end and dt must be positive");
  if (theta < 0.0 or theta > 1.0)
    bad("transient theta must lie in [0, 1]");
  const std::string previous = tr.value("previous", "u0");
  const std::string k_name = tr.value("dt_constant", "k");
  const std::string theta_name = tr.value("theta_constant", "theta");
  const int every = tr.value("output_every", 1);
  if (every < 1)
    bad("transient output_every must be at least 1");
  const double ratio = t_end / dt;
  const int steps = static_cast<int>(std::lround(ratio));
  if (std::abs(ratio - steps) > 1e-9 * std::max(1.0, ratio))
    bad("t_end is not a whole number of steps");

  const auto* prev_decl = _file.coefficient(previous);
  if (!prev_decl or !prev_decl->element)
    throw Error(ErrorKind::UnknownIdentifier, "previous-step coefficient '" + previous + "' is not a Function in the forms file");
  bind({previous});

  // time step and theta as named constants of the forms
  if (_file.constants.count(k_name))
    _bindings.set(k_name, dt);
  else
    log::warning("forms have no constant '" + k_name + "'; the time step comes from the forms");
  if (_file.constants.count(theta_name))
    _bindings.set(theta_name, theta);
  else if (tr.contains("theta"))
    throw Error(ErrorKind::UnknownIdentifier, "theta given but the forms have no constant '" + theta_name + "'");

  const auto& a = form(_d.value("a", "a"));
  const auto& L = form(_d.value("L", "L"));
  auto V = test_space(a);
  auto bc_list = bcs(V);

  auto u1 = std::make_shared<Function>(V);
  auto Vp = std::make_shared<FunctionSpace>(_mesh, prev_decl->element);
  auto u0 = std::make_shared<Function>(Vp);
  const bool same = Vp->element().descriptor().str() == V->element().descriptor().str();
  initial(*u1, tr.value("initial", json()));
  auto copy_back = [&]()
  {
    if (same)
      u0->vector() = u1->vector();
    else
      u0->interpolate(*u1);
  };
  copy_back();
  _bindings.set(previous, u0);

  // matrix reuse unless a sees a rebound coefficient
  bool reuse = false;
  const json rm = tr.value("reuse_matrix", json("auto"));
  if (rm.is_boolean())
    reuse = rm.get<bool>();
  else if (rm == "auto")
  {
    reuse = true;
    for (const auto& c : a.coefficients())
      if (c->name == previous or _timed.count(c->name))
        reuse = false;
  }
  else
    bad("transient reuse_matrix must be true, false or \"auto\"");

  problem::RunResult r;
  r.kind = "transient";
  r.mesh = _mesh;
  r.dofs = V->dim();
  r.solution = u1;
  r.reused_matrix = reuse;
  r.method = pick_method(a, V->dim());
  la::SolverOptions opt = _solver;
  opt.method = r.method;

  std::optional<std::string> output = _opt.output;
  if (!output and _d.contains("output"))
    output = resolve(_base, _d["output"]).string();
  const std::string name = _d.value("name", "u");
  auto series = [&](int n)
  {
    if (!output)
      return;
    fs::path p(*output);
    char idx[16];
    std::snprintf(idx, sizeof(idx), "_%04d", n);
    const std::string ext = p.has_extension() ? p.extension().string() : ".vtk";
    const fs::path file = p.parent_path() / (p.stem().string() + idx + ext);
    write(r, file.string(), *u1, name);
  };
  series(0);

  auto set_time = [&](double t_stage, double t_new)
  {
    for (auto& [n, e] : _timed)
      e->set_parameter("t", t_stage);
    for (auto& g : _bc_values)
      g->set_parameter("t", t_new);
    for (auto& bc : bc_list)
      bc.update();
  };

  // reused operator: A0 as assembled and A with constrained rows/columns
  // replaced by the identity
  std::optional<la::Matrix> A0, A;
  std::vector<char> constrained;
  int total_iterations = 0;
  for (int n = 1; n <= steps; ++n)
  {
    const double t_old = (n - 1) * dt, t_new = n * dt;
    set_time(t_old + theta * dt, t_new);
    la::Vector x(u1->vector());
    la::SolveResult res;
    if (reuse)
    {
      const auto bcmap = collect_bcs(bc_list);
      if (!A)
      {
        A0 = assemble_matrix(a, V, nullptr, _bindings, _assembly);
        A = *A0;
        constrained.assign(V->dim(), 0);
        for (const auto& [i, g] : bcmap)
          constrained[i] = 1;
        const auto& off = A->pattern().offsets();
        const auto& cols = A->pattern().columns();
        auto& vals = A->values();
        for (std::size_t i = 0; i < V->dim(); ++i)
          for (auto k = off[i]; k < off[i + 1]; ++k)
            if (constrained[i] or constrained[cols[k]])
              vals[k] = (constrained[i] and cols[k] == static_cast<std::int32_t>(i)) ? 1.0 : 0.0;
        for (const auto& [i, g] : bcmap)
          if (A->find(i, i) < 0)
            throw Error(ErrorKind::MissingDiagonal, "constrained row " + std::to_string(i) + " has no diagonal entry");
      }
      la::Vector b = assemble_vector(L, V, _bindings, _assembly);
      la::Vector g(V->dim());
      for (const auto& [i, v] : bcmap)
        g[i] = v;
      la::Vector Ag(V->dim());
      A0->mult(g, Ag);
      b.axpy(-1.0, Ag);
      for (const auto& [i, v] : bcmap)
        b[i] = v;
      res = la::solve(*A, b, x, opt);
    }
    else
    {
      auto [As, bs] = assemble_system(a, L, V, bc_list, _bindings, _assembly);
      res = la::solve(As, bs, x, opt);
    }
    u1->vector() = x.array();
    total_iterations += res.iterations;
    log::info("step " + std::to_string(n) + "/" + std::to_string(steps) + " t = " + num(t_new) + ": "
              + std::to_string(res.iterations) + " iterations, residual " + num(res.residual));
    copy_back();
    if (n % every == 0 or n == steps)
      series(n);
  }
  r.steps = steps;
  r.time = steps * dt;
  if (_opt.out)
  {
    *_opt.out << "completed " << steps << " steps to t = " << r.time << " (" << V->dim()
              << " unknowns, " << la::to_string(r.method) << ", " << total_iterations
              << " linear iterations" << (reuse ? ", matrix assembled once" : "") << ")\n";
  }
  save(r, *u1);
  return r;
}
//-----------------------------------------------------------------------------
problem::RunResult problem::run_text(const std::string& text, const std::string& base_dir,
                                     const RunOptions& options)
{
  json d;
  try
  {
    d = json::parse(text);
  }
  catch (const json::parse_error& e)
  {
    // byte offset to line number
    const std::size_t upto = std::min<std::size_t>(e.byte, text.size());
    const int line = 1 + static_cast<int>(std::count(text.begin(), text.begin() + upto, '\n'));
    throw Error(ErrorKind::ParseError, std::string("descriptor is not valid JSON: ") + e.what(), line);
  }
  if (!d.is_object())
    bad("top level must be an object");
  try
  {
    return Runner(std::move(d), base_dir.empty() ? fs::path(".") : fs::path(base_dir), options).run();
  }
  catch (const json::exception& e)
  {
    bad(e.what());
  }
}
//-----------------------------------------------------------------------------
problem::RunResult problem::run_file(const std::string& path, const RunOptions& options)
{
  const std::string text = io::read_file(path);
  try
  {
    return run_text(text, fs::path(path).parent_path().string(), options);
  }
  catch (const Error& e)
  {
    if (e.kind() == ErrorKind::ParseError and e.message().rfind("descriptor", 0) == 0)
      throw Error(e.kind(), path + ": " + e.message(), e.line(), e.column());
    throw;
  }
}
//-----------------------------------------------------------------------------
