// Copyright (c) 2026 femkit contributors
// SPDX-License-Identifier:    MIT

// Acceptance suite: one PASS/FAIL line per criterion. Exit status is the
// number of failed criteria. Pass criterion numbers to run a subset.

#include "support/global_oracle.h"
#include "support/oracle.h"
#include "support/vtk_check.h"

#include <femkit/assembly.h>
#include <femkit/compiler.h>
#include <femkit/error.h>
#include <femkit/form_parser.h>
#include <femkit/function.h>
#include <femkit/io.h>
#include <femkit/problem.h>
#include <femkit/quadrature.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <unistd.h>

using namespace femkit;
using namespace femkit::fl;
namespace fs = std::filesystem;

namespace
{
const fs::path demos = fs::path(FEMKIT_SOURCE_DIR) / "demos";

struct Outcome
{
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double v)
{
  char buf[64];
  std::snprintf(buf, sizeof(buf), f, v);
  return buf;
}

std::string join(const std::vector<double>& v, const char* f = "%.3f")
{
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i)
    s += (i ? "," : "") + fmt(f, v[i]);
  return s;
}

std::shared_ptr<Expression> expr(const std::string& s, int degree = 2)
{
  return std::make_shared<Expression>(std::vector<std::string>{s}, 2, degree);
}

/// Rates between consecutive entries for mesh sizes h.
std::vector<double> rates(const std::vector<double>& e, const std::vector<double>& h)
{
  std::vector<double> r;
  for (std::size_t i = 1; i < e.size(); ++i)
    r.push_back(std::log(e[i - 1] / e[i]) / std::log(h[i - 1] / h[i]));
  return r;
}

bool within(const std::vector<double>& r, double target, double tol)
{
  for (double v : r)
    if (std::abs(v - target) > tol)
      return false;
  return true;
}

fl::FormFile forms(const std::string& name) { return read_form_file((demos / name).string()); }

std::string read_text(const fs::path& p) { return io::read_file(p.string()); }

std::string replace_all(std::string s, const std::string& from, const std::string& to)
{
  for (auto p = s.find(from); p != std::string::npos; p = s.find(from, p + to.size()))
    s.replace(p, from.size(), to);
  return s;
}

std::shared_ptr<const Mesh> square(std::size_t n) { return std::make_shared<Mesh>(unit_square(n, n)); }

/// Largest |A_ij - A_ji| over the stored entries (exact comparison).
double asymmetry(const la::Matrix& A)
{
  const auto& off = A.pattern().offsets();
  const auto& cols = A.pattern().columns();
  double m = 0.0;
  for (std::size_t i = 0; i < A.num_rows(); ++i)
    for (auto k = off[i]; k < off[i + 1]; ++k)
      m = std::max(m, std::abs(A.values()[k] - A.get(cols[k], i)));
  return m;
}

const char* u_exact = "sin(pi*x[0])*sin(pi*x[1])";
const char* f_exact = "2*pi^2*sin(pi*x[0])*sin(pi*x[1])";

/// Poisson forms with CG_q from the demo file.
fl::FormFile poisson_forms(int q)
{
  auto text = read_text(demos / "poisson.ufl");
  text = replace_all(text, "\"CG\", triangle, 1", "\"CG\", triangle, " + std::to_string(q));
  return parse_form_file(text);
}

//-----------------------------------------------------------------------------
Outcome reaction_diffusion()
{
  const auto file = forms("reaction_diffusion.ufl");
  auto mesh = square(32);
  auto V = std::make_shared<FunctionSpace>(mesh, file.element("element"));
  const auto* f = file.coefficient("f");
  Bindings b;
  b.set("f", std::make_shared<Expression>(f->expression, 2, f->degree));
  const auto A = assemble_matrix(file.form("a"), V, nullptr, b);
  const auto rhs = assemble_vector(file.form("L"), V, b);
  const double asym = asymmetry(A);
  la::SolverOptions opt;
  opt.method = la::Method::cg;
  opt.rtol = 1e-11;
  la::Vector x(V->dim());
  const auto res = la::solve(A, rhs, x, opt);
  la::Vector Ax(V->dim());
  A.mult(x, Ax);
  Ax.axpy(-1.0, rhs);
  const double rel = Ax.norm() / rhs.norm();
  Outcome o;
  o.pass = asym <= 1e-14 and rel <= 1e-10;
  o.detail = "N=" + std::to_string(V->dim()) + " asym=" + fmt("%.1e", asym) + " CG its="
             + std::to_string(res.iterations) + " |r|/|b|=" + fmt("%.1e", rel);
  return o;
}
//-----------------------------------------------------------------------------
struct PoissonRun
{
  std::vector<double> l2, h10;
};

PoissonRun poisson_convergence(int q, const std::vector<std::size_t>& ns)
{
  const auto file = poisson_forms(q);
  PoissonRun out;
  auto exact = expr(u_exact, q + 2);
  for (auto n : ns)
  {
    auto mesh = square(n);
    auto V = std::make_shared<FunctionSpace>(mesh, file.element("element"));
    VariationalProblem p(file.form("a"), file.form("L"), V,
                         {DirichletBC(V, Expression::constant({0.0}, 2), domain_boundary())});
    p.bindings.set("f", expr(f_exact, q + 2));
    p.solver.rtol = 1e-12;
    Function u(V);
    p.solve(u);
    out.l2.push_back(errornorm(u, exact, NormKind::L2));
    out.h10.push_back(errornorm(u, exact, NormKind::H10));
  }
  return out;
}

Outcome cg_poisson()
{
  const std::vector<std::size_t> ns{8, 16, 32};
  const std::vector<double> h{1.0 / 8, 1.0 / 16, 1.0 / 32};
  const double tol[4] = {0, 0.1, 0.15, 0.2};
  Outcome o{true, ""};
  for (int q = 1; q <= 3; ++q)
  {
    const auto r = poisson_convergence(q, ns);
    const auto rl = rates(r.l2, h), rh = rates(r.h10, h);
    const bool ok = within(rl, q + 1, tol[q]) and within(rh, q, tol[q]);
    o.pass = o.pass and ok;
    o.detail += (q > 1 ? "; " : "") + std::string("q=") + std::to_string(q) + " L2 " + join(rl) + " H10 "
                + join(rh);
  }
  return o;
}
//-----------------------------------------------------------------------------
Outcome dg_poisson()
{
  const auto file = forms("dg_poisson.ufl");
  const std::vector<double> h{1.0 / 8, 1.0 / 16, 1.0 / 32};
  std::vector<double> e;
  for (std::size_t n : {8, 16, 32})
  {
    auto mesh = square(n);
    auto V = std::make_shared<FunctionSpace>(mesh, file.element("element"));
    VariationalProblem p(file.form("a"), file.form("L"), V);
    p.bindings.set("f", expr(f_exact, 3));
    p.solver.rtol = 1e-12;
    Function u(V);
    p.solve(u);
    e.push_back(errornorm(u, expr(u_exact, 3), NormKind::L2));
  }
  const auto r = rates(e, h);
  return {within(r, 2.0, 0.2), "L2 errors " + join(e, "%.2e") + " rates " + join(r)};
}
//-----------------------------------------------------------------------------
Outcome stokes()
{
  // u = curl of sin(pi x) sin(pi y) / pi, p with zero mean
  const std::string ux = "sin(pi*x[0])*cos(pi*x[1])", uy = "-cos(pi*x[0])*sin(pi*x[1])";
  const std::string p_exact = "sin(pi*x[0])*cos(pi*x[1])";
  const std::string fx = "2*pi^2*sin(pi*x[0])*cos(pi*x[1]) + pi*cos(pi*x[0])*cos(pi*x[1])";
  const std::string fy = "-2*pi^2*cos(pi*x[0])*sin(pi*x[1]) - pi*sin(pi*x[0])*sin(pi*x[1])";
  const auto file = forms("stokes.ufl");
  const std::vector<std::size_t> ns{4, 8, 12};
  std::vector<double> h, eu, ep;
  auto u_ex = std::make_shared<Expression>(std::vector<std::string>{ux, uy}, 2, 4);
  auto p_ex = expr(p_exact, 4);
  for (auto n : ns)
  {
    h.push_back(1.0 / n);
    auto mesh = square(n);
    auto W = std::make_shared<FunctionSpace>(mesh, file.element("TH"));
    std::vector<DirichletBC> bcs;
    bcs.emplace_back(W->sub(0), u_ex, domain_boundary());
    // pin the pressure at the origin; the mean is removed afterwards
    bcs.emplace_back(W->sub(1), Expression::constant({0.0}, 2),
                     [](std::span<const double> x, bool) { return near(x[0], 0.0) and near(x[1], 0.0); },
                     DirichletBC::Method::pointwise);
    VariationalProblem prob(file.form("a"), file.form("L"), W, std::move(bcs));
    prob.bindings.set("f", std::make_shared<Expression>(std::vector<std::string>{fx, fy}, 2, 4));
    prob.method = la::Method::lu;
    Function w(W);
    prob.solve(w);
    auto parts = w.split();
    auto& p = parts[1];
    const auto P = p.function_space_ptr();
    const double mean
        = assemble_scalar(integrate(coefficient(0, "p", P->element_ptr()), Measure::cell), *mesh,
                          Bindings().set("p", std::shared_ptr<const GenericFunction>(&p, [](auto*) {})));
    for (auto& v : p.vector())
      v -= mean;
    eu.push_back(errornorm(parts[0], u_ex, NormKind::L2));
    ep.push_back(errornorm(p, p_ex, NormKind::L2));
  }
  const auto ru = rates(eu, h), rp = rates(ep, h);
  return {within(ru, 3.0, 0.25) and within(rp, 2.0, 0.25),
          "n=4,8,12 velocity rates " + join(ru) + " pressure rates " + join(rp)};
}
//-----------------------------------------------------------------------------
Outcome nonlinear_poisson()
{
  const auto file = forms("nonlinear_poisson.ufl");
  auto mesh = square(32);
  auto V = std::make_shared<FunctionSpace>(mesh, file.element("element"));
  // Jacobian from automatic differentiation of the residual
  auto p = VariationalProblem::nonlinear(file.form("L"), "u", V,
                                         {DirichletBC(V, Expression::constant({0.0}, 2), domain_boundary())});
  p.bindings.set("f", expr("x[0]*sin(x[1])", 2));
  p.newton.atol = 1e-10;
  p.newton.rtol = 0.0;
  p.newton.maxit = 8;
  p.method = la::Method::lu;
  Function u(V);
  const auto rep = p.solve(u);
  const auto& r = rep.residuals;
  std::vector<double> ratio;
  for (std::size_t k = 1; k < r.size(); ++k)
    ratio.push_back(r[k] / (r[k - 1] * r[k - 1]));
  bool tail = ratio.size() >= 2 and ratio.back() <= 10.0 * ratio[ratio.size() - 2];
  Outcome o;
  o.pass = rep.newton_iterations <= 8 and r.back() <= 1e-10 and tail;
  o.detail = std::to_string(rep.newton_iterations) + " iterations, residuals " + join(r, "%.2e")
             + ", r_k+1/r_k^2 " + join(ratio, "%.2e");
  return o;
}
//-----------------------------------------------------------------------------
Outcome gateaux()
{
  const auto file = forms("nonlinear_poisson.ufl");
  auto mesh = square(16);
  auto V = std::make_shared<FunctionSpace>(mesh, file.element("element"));
  const auto& F = file.form("L");
  const auto J = derivative(F, file.coefficient("u")->expr);
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> U(-1, 1);
  const double eps = 1e-5;
  double worst = 0.0;
  auto f = expr("x[0]*sin(x[1])", 2);
  for (int s = 0; s < 5; ++s)
  {
    Function u(V), w(V), up(V), um(V);
    for (std::size_t i = 0; i < V->dim(); ++i)
    {
      u.vector()[i] = U(rng);
      w.vector()[i] = U(rng);
      up.vector()[i] = u.vector()[i] + eps * w.vector()[i];
      um.vector()[i] = u.vector()[i] - eps * w.vector()[i];
    }
    auto bind = [&](const Function& at)
    {
      Bindings b;
      b.set("f", f);
      b.set("u", std::shared_ptr<const GenericFunction>(&at, [](auto*) {}));
      return b;
    };
    const auto A = assemble_matrix(J, V, nullptr, bind(u));
    la::Vector Jw(V->dim());
    A.mult(la::Vector(w.vector()), Jw);
    auto Fp = assemble_vector(F, V, bind(up));
    const auto Fm = assemble_vector(F, V, bind(um));
    Fp.axpy(-1.0, Fm);
    double diff = 0.0, scale = 0.0;
    for (std::size_t i = 0; i < V->dim(); ++i)
    {
      diff = std::max(diff, std::abs(Fp[i] / (2 * eps) - Jw[i]));
      scale = std::max(scale, std::abs(Jw[i]));
    }
    worst = std::max(worst, diff / scale);
  }
  return {worst <= 1e-6, "max relative difference over 5 states " + fmt("%.2e", worst)};
}
//-----------------------------------------------------------------------------
double heat_error(double theta, double dt, std::size_t n)
{
  std::ostringstream d;
  d << R"({"schema": "femkit-prob-1", "mesh": {"generate": "square", "n": )" << n << R"(},
    "forms": "heat.ufl", "constants": {"c": 1.0}, "coefficients": {"f": 0},
    "bcs": [{"value": 0, "region": "on_boundary"}],
    "solver": {"method": "cg", "rtol": 1e-12},
    "transient": {"t_end": 0.1, "dt": )"
    << fmt("%.17g", dt) << R"(, "theta": )" << theta << R"J(,
      "initial": "sin(pi*x[0])*sin(pi*x[1])"}})J";
  const auto r = problem::run_text(d.str(), demos.string());
  return errornorm(*r.solution, expr("exp(-2*pi^2*0.1)*sin(pi*x[0])*sin(pi*x[1])", 4), NormKind::L2);
}

Outcome transient()
{
  const std::vector<double> dts{1e-2, 5e-3, 2.5e-3};
  Outcome o{true, ""};
  for (double theta : {0.5, 1.0})
  {
    std::vector<double> e;
    for (double dt : dts)
      e.push_back(heat_error(theta, dt, 32));
    const auto r = rates(e, dts);
    const double target = theta == 0.5 ? 2.0 : 1.0;
    o.pass = o.pass and within(r, target, 0.2);
    o.detail += std::string(theta == 0.5 ? "" : "; ") + "theta=" + fmt("%.1f", theta) + " errors "
                + join(e, "%.2e") + " orders " + join(r);
  }
  return o;
}
//-----------------------------------------------------------------------------
bool full_arity(const Form& f)
{
  try
  {
    check_arity(f);
    return true;
  }
  catch (const Error&)
  {
    return false;
  }
}

Outcome kernel_oracle()
{
  // reference P1 stiffness and mass on the unit triangle
  auto P1 = std::make_shared<FiniteElement>(ElementDescriptor::scalar(Family::CG, cell::Type::triangle, 1));
  auto v = argument(0, P1), u = argument(1, P1);
  const std::vector<double> ref{0, 0, 1, 0, 0, 1};
  auto tab = [&](const Form& f)
  {
    const auto cf = compile_form(f);
    std::vector<double> A(cf.kernels[0].size());
    TabulateArgs args;
    args.coordinates = ref;
    cf.kernels[0].tabulate_tensor(A, args);
    return A;
  };
  const auto K = tab(integrate(inner(grad(v), grad(u)), Measure::cell));
  const auto M = tab(integrate(product(v, u), Measure::cell));
  const double Kref[9] = {1, -0.5, -0.5, -0.5, 0.5, 0, -0.5, 0, 0.5};
  double ref_err = 0.0;
  for (int i = 0; i < 9; ++i)
  {
    ref_err = std::max(ref_err, std::abs(K[i] - Kref[i]));
    ref_err = std::max(ref_err, std::abs(M[i] - (i % 4 == 0 ? 2.0 : 1.0) / 24.0));
  }

  std::mt19937 rng(2026);
  double worst = 0.0;
  int count = 0;
  for (const char* name : {"reaction_diffusion.ufl", "stokes.ufl", "lift.ufl", "convection_diffusion.ufl",
                           "nonlinear_poisson.ufl", "dg_poisson.ufl", "poisson.ufl", "mass.ufl", "heat.ufl"})
  {
    const auto file = forms(name);
    for (const auto& [fname, form] : file.forms)
    {
      if (!full_arity(form))
        continue;
      worst = std::max(worst, oracle::compare(form, compile_form(form), rng, 20));
      ++count;
    }
  }
  return {ref_err <= 1e-14 and worst <= 1e-12,
          std::to_string(count) + " forms x 20 cells, max relative difference " + fmt("%.1e", worst)
              + ", reference P1 tensors " + fmt("%.1e", ref_err)};
}
//-----------------------------------------------------------------------------
Outcome global_oracle()
{
  std::mt19937 rng(9);
  double worst = 0.0;
  int checks = 0;
  std::vector<std::shared_ptr<const Mesh>> meshes2;
  for (auto [nx, ny] : {std::pair{1, 1}, {2, 1}, {1, 2}, {2, 2}, {4, 1}, {1, 3}})
    meshes2.push_back(std::make_shared<Mesh>(unit_square(nx, ny)));
  for (const auto& entry : fs::directory_iterator(demos))
  {
    if (entry.path().extension() != ".ufl")
      continue;
    const auto file = read_form_file(entry.path().string());
    for (const auto& [name, form] : file.forms)
    {
      if (!full_arity(form))
        continue;
      for (const auto& mesh : meshes2)
      {
        worst = std::max(worst, oracle::global_check(form, mesh, rng));
        ++checks;
      }
    }
  }
  // interval and tetrahedral meshes, with interior and exterior facet terms
  for (int tdim : {1, 3})
  {
    auto ct = cell::simplex(tdim);
    auto cg2 = std::make_shared<FiniteElement>(ElementDescriptor::scalar(Family::CG, ct, 2));
    auto dg1 = std::make_shared<FiniteElement>(ElementDescriptor::scalar(Family::DG, ct, 1));
    auto n = facet_normal(tdim);
    auto v = argument(0, dg1), u = argument(1, dg1);
    auto sipg = integrate(inner(grad(v), grad(u)), Measure::cell)
                - integrate(inner(avg(grad(v)), jump(u, n)), Measure::interior_facet)
                - integrate(inner(jump(v, n), avg(grad(u))), Measure::interior_facet)
                + integrate(product(constant(4.0, "alpha"), inner(jump(v, n), jump(u, n))),
                            Measure::interior_facet)
                + integrate(product(v, u), Measure::exterior_facet);
    auto w = argument(0, cg2), z = argument(1, cg2);
    auto stiff = integrate(inner(grad(w), grad(z)), Measure::cell);
    std::vector<std::shared_ptr<const Mesh>> meshes;
    if (tdim == 1)
      for (std::size_t k = 1; k <= 8; ++k)
        meshes.push_back(std::make_shared<Mesh>(unit_interval(k)));
    else
      meshes.push_back(std::make_shared<Mesh>(unit_cube(1, 1, 1)));
    for (const auto& mesh : meshes)
    {
      worst = std::max(worst, oracle::global_check(sipg, mesh, rng));
      worst = std::max(worst, oracle::global_check(stiff, mesh, rng));
      checks += 2;
    }
  }
  return {worst <= 1e-12, std::to_string(checks) + " form/mesh pairs, max relative difference " + fmt("%.1e", worst)};
}
//-----------------------------------------------------------------------------
long euler(const Mesh& mesh)
{
  long chi = 0;
  for (int d = 0; d <= mesh.tdim(); ++d)
    chi += (d % 2 == 0 ? 1 : -1) * static_cast<long>(mesh.num_entities(d));
  return chi;
}

std::set<std::pair<int, int>> computed(const Mesh& mesh)
{
  std::set<std::pair<int, int>> s;
  for (int i = 0; i <= mesh.tdim(); ++i)
    for (int j = 0; j <= mesh.tdim(); ++j)
      if (mesh.has_connectivity(i, j))
        s.insert({i, j});
  return s;
}

bool transpose_symmetric(const Mesh& mesh, int d0, int d1)
{
  const auto& a = mesh.connectivity(d0, d1);
  const auto& b = mesh.connectivity(d1, d0);
  for (std::size_t i = 0; i < a.num_nodes(); ++i)
    for (auto j : a.links(i))
    {
      auto back = b.links(j);
      if (std::find(back.begin(), back.end(), static_cast<std::int32_t>(i)) == back.end())
        return false;
    }
  for (std::size_t j = 0; j < b.num_nodes(); ++j)
    for (auto i : b.links(j))
    {
      auto fwd = a.links(i);
      if (std::find(fwd.begin(), fwd.end(), static_cast<std::int32_t>(j)) == fwd.end())
        return false;
    }
  return true;
}

/// No vertex lies strictly inside an edge it does not belong to.
bool no_hanging_nodes(const Mesh& mesh)
{
  const auto& ev = mesh.connectivity(1, 0);
  for (std::size_t e = 0; e < ev.num_nodes(); ++e)
  {
    auto ab = ev.links(e);
    auto a = mesh.vertex(ab[0]), b = mesh.vertex(ab[1]);
    const double len2 = (b[0] - a[0]) * (b[0] - a[0]) + (b[1] - a[1]) * (b[1] - a[1]);
    for (std::size_t v = 0; v < mesh.num_vertices(); ++v)
    {
      if (static_cast<std::int32_t>(v) == ab[0] or static_cast<std::int32_t>(v) == ab[1])
        continue;
      auto x = mesh.vertex(v);
      const double t = ((x[0] - a[0]) * (b[0] - a[0]) + (x[1] - a[1]) * (b[1] - a[1])) / len2;
      const double cross = (x[0] - a[0]) * (b[1] - a[1]) - (x[1] - a[1]) * (b[0] - a[0]);
      if (t > 1e-12 and t < 1 - 1e-12 and std::abs(cross) < 1e-12)
        return false;
    }
  }
  return true;
}

Outcome mesh_invariants()
{
  std::vector<std::string> failed;
  // lazy connectivity: only what a request needs is computed
  auto sq = unit_square(3, 3);
  if (computed(sq) != std::set<std::pair<int, int>>{{2, 0}})
    failed.push_back("initial connectivity");
  sq.connectivity(1, 0);
  if (computed(sq) != std::set<std::pair<int, int>>{{2, 0}, {1, 0}, {2, 1}})
    failed.push_back("lazy (1,0)");
  auto sq2 = unit_square(3, 3);
  sq2.connectivity(0, 2);
  if (computed(sq2) != std::set<std::pair<int, int>>{{2, 0}, {0, 2}})
    failed.push_back("lazy (0,2)");

  auto cube = unit_cube(2, 2, 1);
  for (int d0 = 0; d0 <= 3; ++d0)
    for (int d1 = 0; d1 <= 3; ++d1)
      if (!transpose_symmetric(cube, d0, d1))
        failed.push_back("transpose " + std::to_string(d0) + "," + std::to_string(d1));

  for (std::size_t n : {1, 2, 5})
    if (euler(unit_square(n, n + 1)) != 1 or euler(unit_cube(n, 1, n)) != 1)
      failed.push_back("euler n=" + std::to_string(n));

  double vol_err = 0.0;
  for (const Mesh& m : {refine(unit_square(3, 2)), refine(refine(unit_cube(1, 1, 1))), refine(unit_interval(3))})
    vol_err = std::max(vol_err, std::abs(total_volume(m) - 1.0));

  Mesh mesh = unit_square(4, 4);
  bool conforming = true;
  for (int step = 0; step < 4; ++step)
  {
    MeshFunction<bool> marked(mesh, 2, false);
    for (std::size_t c = 0; c < mesh.num_cells(); ++c)
    {
      auto g = cell_geometry(mesh, c);
      marked[c] = g.x0[0] + g.x0[1] < 0.5;
    }
    mesh = refine(mesh, marked);
    vol_err = std::max(vol_err, std::abs(total_volume(mesh) - 1.0));
    const auto ext = exterior_facets(mesh);
    double perimeter = 0.0;
    for (std::size_t f = 0; f < ext.size(); ++f)
      if (ext[f])
        perimeter += facet_geometry(mesh, f).area;
    conforming = conforming and euler(mesh) == 1 and std::abs(perimeter - 4.0) < 1e-12 and no_hanging_nodes(mesh);
  }
  if (vol_err > 1e-12)
    failed.push_back("volume");
  if (!conforming)
    failed.push_back("conformity");
  std::string detail = "volume drift " + fmt("%.1e", vol_err) + ", marked refinement " + std::to_string(mesh.num_cells())
                       + " cells conforming";
  for (const auto& f : failed)
    detail += "; failed: " + f;
  return {failed.empty(), detail};
}
//-----------------------------------------------------------------------------
Outcome bc_paths()
{
  double worst = 0.0, asym = 0.0;
  int count = 0;
  for (int q = 1; q <= 3; ++q)
  {
    const auto file = poisson_forms(q);
    for (std::size_t n : {8, 16, 32})
    {
      auto mesh = square(n);
      auto V = std::make_shared<FunctionSpace>(mesh, file.element("element"));
      DirichletBC bc(V, Expression::constant({0.0}, 2), domain_boundary());
      Bindings b;
      b.set("f", expr(f_exact, q + 2));
      auto A = assemble_matrix(file.form("a"), V, nullptr, b);
      auto rhs = assemble_vector(file.form("L"), V, b);
      bc.apply(&A, &rhs);
      la::SolverOptions opt;
      opt.method = la::Method::bicgstab;
      opt.rtol = 1e-12;
      la::Vector x1(V->dim());
      la::solve(A, rhs, x1, opt);

      auto [S, s] = assemble_system(file.form("a"), file.form("L"), V, {bc}, b);
      asym = std::max(asym, asymmetry(S));
      opt.method = la::Method::cg;
      la::Vector x2(V->dim());
      la::solve(S, s, x2, opt);
      for (std::size_t i = 0; i < V->dim(); ++i)
        worst = std::max(worst, std::abs(x1[i] - x2[i]));
      ++count;
    }
  }
  return {worst <= 1e-10 and asym == 0.0, std::to_string(count) + " problems, max solution difference "
                                              + fmt("%.1e", worst) + ", system matrix asymmetry " + fmt("%.1e", asym)};
}
//-----------------------------------------------------------------------------
Outcome lift()
{
  const auto file = forms("lift.ufl");
  auto mesh = square(8);
  auto V = std::make_shared<FunctionSpace>(mesh, file.element("element"));
  auto value = [&](const std::string& p)
  {
    auto fp = std::make_shared<Function>(interpolate(*expr(p, 1), V));
    return assemble_scalar(file.form("M"), *mesh, Bindings().set("p", fp));
  };
  const double m1 = value("1"), my = value("x[1]");
  return {std::abs(m1) <= 1e-13 and std::abs(my - 1.0) <= 1e-12,
          "p=1: " + fmt("%.1e", m1) + ", p=x[1]: 1" + fmt("%+.1e", my - 1.0)};
}
//-----------------------------------------------------------------------------
double factorial(int n) { return n <= 1 ? 1.0 : n * factorial(n - 1); }

Outcome quadrature_exactness()
{
  double worst = 0.0;
  int rules = 0;
  for (int tdim = 1; tdim <= 3; ++tdim)
    for (int deg = 1; deg <= 10; ++deg)
    {
      const auto r = quadrature::make_rule(cell::simplex(tdim), deg);
      ++rules;
      for (int a = 0; a <= deg; ++a)
        for (int b = 0; b <= (tdim > 1 ? deg - a : 0); ++b)
          for (int c = 0; c <= (tdim > 2 ? deg - a - b : 0); ++c)
          {
            double s = 0.0;
            for (std::size_t q = 0; q < r.size(); ++q)
            {
              const double* x = r.point(q);
              double v = std::pow(x[0], a);
              if (tdim > 1)
                v *= std::pow(x[1], b);
              if (tdim > 2)
                v *= std::pow(x[2], c);
              s += r.weights[q] * v;
            }
            const double exact = factorial(a) * factorial(b) * factorial(c) / factorial(a + b + c + tdim);
            worst = std::max(worst, std::abs(s - exact) / exact);
          }
    }
  return {worst <= 1e-14, std::to_string(rules) + " rules, max relative error " + fmt("%.1e", worst)};
}
//-----------------------------------------------------------------------------
Outcome cli_end_to_end()
{
  const fs::path dir = fs::temp_directory_path() / ("femkit_accept_" + std::to_string(::getpid()));
  fs::create_directories(dir);
  const std::string exe = FEMKIT_CLI;
  auto run = [&](const std::string& args)
  {
    const std::string cmd = "\"" + exe + "\" " + args + " > \"" + (dir / "log.txt").string() + "\" 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  };
  std::vector<std::string> failed;
  const auto ir1 = dir / "ir1.json", ir2 = dir / "ir2.json";
  const std::string ufl = "\"" + (demos / "poisson.ufl").string() + "\"";
  if (run("compile " + ufl + " --emit-ir \"" + ir1.string() + "\"") != 0
      or run("compile " + ufl + " --emit-ir \"" + ir2.string() + "\"") != 0)
    failed.push_back("compile exit code");
  else if (read_text(ir1) != read_text(ir2))
    failed.push_back("compile not deterministic");

  const auto vtk = dir / "np.vtk";
  if (run("solve \"" + (demos / "nonlinear_poisson.json").string() + "\" --output \"" + vtk.string() + "\"") != 0)
    failed.push_back("solve exit code");
  else
  {
    const auto log = read_text(dir / "log.txt");
    if (log.find("Newton converged in") == std::string::npos)
      failed.push_back("no convergence message");
    const auto err = vtkcheck::check(read_text(vtk));
    if (!err.empty())
      failed.push_back("VTK: " + err);
  }

  const auto m1 = dir / "m1.xml", m2 = dir / "m2.xml";
  if (run("mesh generate square 8 -o \"" + m1.string() + "\"") != 0)
    failed.push_back("mesh generate exit code");
  else
  {
    const Mesh a = io::read_mesh_xml(m1.string());
    const Mesh ref = unit_square(8, 8);
    bool same = a.cells() == ref.cells() and a.coordinates().size() == ref.coordinates().size()
                and std::equal(a.coordinates().begin(), a.coordinates().end(), ref.coordinates().begin());
    io::write_mesh_xml(a, m2.string());
    same = same and read_text(m1) == read_text(m2);
    if (!same)
      failed.push_back("mesh XML round trip");
  }
  fs::remove_all(dir);
  std::string detail = "compile deterministic, solve wrote a valid VTK file, mesh XML round trip exact";
  if (!failed.empty())
  {
    detail.clear();
    for (const auto& f : failed)
      detail += (detail.empty() ? "failed: " : "; ") + f;
  }
  return {failed.empty(), detail};
}
} // namespace

int main(int argc, char** argv)
{
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"reaction-diffusion system, CG solve", reaction_diffusion},
      {"CG Poisson convergence rates", cg_poisson},
      {"DG interior penalty convergence", dg_poisson},
      {"Stokes Taylor-Hood convergence", stokes},
      {"nonlinear Poisson Newton", nonlinear_poisson},
      {"Gateaux derivative vs finite differences", gateaux},
      {"transient theta-method temporal order", transient},
      {"kernel oracle equivalence", kernel_oracle},
      {"global assembly oracle", global_oracle},
      {"mesh invariants", mesh_invariants},
      {"boundary condition path equivalence", bc_paths},
      {"lift functional", lift},
      {"quadrature exactness", quadrature_exactness},
      {"CLI end to end", cli_end_to_end},
  };
  std::set<int> only;
  for (int i = 1; i < argc; ++i)
    only.insert(std::atoi(argv[i]));

  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i)
  {
    const int id = static_cast<int>(i) + 1;
    if (!only.empty() and !only.count(id))
      continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try
    {
      o = criteria[i].second();
    }
    catch (const std::exception& e)
    {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    failures += !o.pass;
    std::printf("%s %2d  %s: %s (%.1f s)\n", o.pass ? "PASS" : "FAIL", id, criteria[i].first.c_str(),
                o.detail.c_str(), secs);
    std::fflush(stdout);
  }
  return failures;
}
