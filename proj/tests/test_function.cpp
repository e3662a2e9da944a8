// Copyright (c) 2026 femkit contributors
// SPDX-License-Identifier:    MIT

#include <femkit/assembly.h>
#include <femkit/error.h>
#include <femkit/function.h>
#include <gtest/gtest.h>

#include <random>

using namespace femkit;

namespace
{
std::shared_ptr<const Mesh> square(std::size_t n)
{
  return std::make_shared<Mesh>(unit_square(n, n));
}

std::shared_ptr<Expression> expr(std::vector<std::string> s, int degree = 2)
{
  return std::make_shared<Expression>(s, 2, degree);
}

std::shared_ptr<FunctionSpace> taylor_hood(std::shared_ptr<const Mesh> mesh)
{
  auto v = ElementDescriptor::vector(
      ElementDescriptor::scalar(Family::CG, cell::Type::triangle, 2), 2);
  auto p = ElementDescriptor::scalar(Family::CG, cell::Type::triangle, 1);
  return std::make_shared<FunctionSpace>(mesh, ElementDescriptor::mixed({v, p}));
}

double eval1(const GenericFunction& f, double x, double y)
{
  double v = 0.0;
  const double p[2] = {x, y};
  f.eval(p, {&v, 1});
  return v;
}
} // namespace

TEST(Function, SpaceDimensions)
{
  EXPECT_EQ(FunctionSpace::create(square(32), "CG", 1)->dim(), 1089u);
  EXPECT_EQ(FunctionSpace::create(square(2), "DG", 0)->dim(), 8u);
  EXPECT_EQ(taylor_hood(square(2))->dim(), 59u);
}

TEST(Function, Evaluation)
{
  auto V = FunctionSpace::create(square(4), "CG", 1);
  auto u = interpolate(*expr({"x[0]"}), V);
  EXPECT_NEAR(eval1(u, 0.3, 0.7), 0.3, 1e-14);
  EXPECT_NEAR(eval1(*expr({"sin(x[0])"}), 0.0, 123.0), 0.0, 0.0);
  const double outside[2] = {1.5, 0.5};
  double v = 0.0;
  try
  {
    u.eval(outside, {&v, 1});
    FAIL();
  }
  catch (const Error& e)
  {
    EXPECT_EQ(e.kind(), ErrorKind::PointNotInMesh);
  }
}

TEST(Function, PolynomialReproduction)
{
  std::mt19937 rng(1);
  std::uniform_real_distribution<double> U(0.01, 0.99);
  auto mesh = square(3);
  const char* polys[] = {"1", "x[0] - 2*x[1]", "x[0]*x[0]", "x[0]*x[1]*x[1] - x[1]^3"};
  for (int q = 1; q <= 3; ++q)
  {
    auto V = FunctionSpace::create(mesh, "CG", q);
    auto f = expr({polys[q]}, q);
    auto u = interpolate(*f, V);
    for (int t = 0; t < 20; ++t)
    {
      const double x = U(rng), y = U(rng);
      EXPECT_NEAR(eval1(u, x, y), eval1(*f, x, y), 1e-12);
    }
    EXPECT_LE(errornorm(u, f, NormKind::L2), 1e-10);
  }
}

TEST(Function, ContinuityAcrossFacets)
{
  auto mesh = square(3);
  auto V = FunctionSpace::create(mesh, "CG", 3);
  auto u = interpolate(*expr({"sin(3*x[0])*exp(x[1])"}), V);
  const auto& fc = mesh->connectivity(1, 2);
  for (std::size_t f = 0; f < fc.num_nodes(); ++f)
  {
    auto cells = fc.links(f);
    if (cells.size() != 2)
      continue;
    const auto m = MeshEntity(*mesh, 1, f).midpoint();
    double a = 0.0, b = 0.0;
    u.eval_cell({m.data(), 2}, *mesh, cells[0], {&a, 1});
    u.eval_cell({m.data(), 2}, *mesh, cells[1], {&b, 1});
    EXPECT_NEAR(a, b, 1e-10);
  }
}

TEST(Function, InterpolationConvergence)
{
  auto f = expr({"sin(x[0])*cos(x[1])"}, 6);
  std::vector<double> err;
  for (std::size_t n : {2, 4, 8})
  {
    auto V = FunctionSpace::create(square(n), "CG", 3);
    err.push_back(errornorm(interpolate(*f, V), f, NormKind::L2));
  }
  for (std::size_t i = 1; i < err.size(); ++i)
    EXPECT_NEAR(std::log2(err[i - 1] / err[i]), 4.0, 0.3);
}

TEST(Function, InterpolateShapes)
{
  auto V = FunctionSpace::create(square(2), "CG", 2);
  auto one = interpolate(*Expression::constant({1.0}, 2), V);
  for (double v : one.vector())
    EXPECT_EQ(v, 1.0);
  auto mesh = square(3);
  auto V1 = FunctionSpace::create(mesh, "CG", 1);
  auto x = interpolate(*expr({"x[0]"}), V1);
  for (std::size_t i = 0; i < mesh->num_vertices(); ++i)
    EXPECT_NEAR(x.vector()[i], mesh->vertex(i)[0], 1e-15);
  try
  {
    interpolate(*expr({"(x[0], x[1])"}), V1);
    FAIL();
  }
  catch (const Error& e)
  {
    EXPECT_EQ(e.kind(), ErrorKind::ShapeMismatch);
  }
}

TEST(Function, Projection)
{
  auto mesh = square(8);
  auto V = FunctionSpace::create(mesh, "CG", 1);
  auto g = std::make_shared<Function>(interpolate(*expr({"sin(x[0]) + x[1]"}), V));
  const auto P = project(g, V);
  for (std::size_t i = 0; i < P.vector().size(); ++i)
    EXPECT_NEAR(P.vector()[i], g->vector()[i], 1e-10);
  auto PP = project(std::make_shared<Function>(P), V);
  for (std::size_t i = 0; i < P.vector().size(); ++i)
    EXPECT_NEAR(PP.vector()[i], P.vector()[i], 1e-10);

  // discontinuous step: projection beats interpolation in L2
  auto step = std::make_shared<Expression>(
      [](const double* x, double* v) { v[0] = x[0] < 0.41 ? 1.0 : 0.0; }, 1, 2, 6);
  const auto Ps = project(step, V);
  const auto Is = interpolate(*step, V);
  EXPECT_LE(errornorm(Ps, step), errornorm(Is, step));

  auto W = FunctionSpace::create_vector(mesh, "CG", 2);
  const auto vec = project(expr({"sin(x[0])", "cos(x[1])"}), W);
  for (double v : vec.vector())
    EXPECT_TRUE(std::isfinite(v));
  double val[2];
  const double p[2] = {0.5, 0.5};
  vec.eval(p, val);
  EXPECT_NEAR(val[0], std::sin(0.5), 1e-3);
  EXPECT_NEAR(val[1], std::cos(0.5), 1e-3);
}

TEST(Function, SplitMixed)
{
  auto W = taylor_hood(square(2));
  Function w(W);
  auto parts = w.split();
  ASSERT_EQ(parts.size(), 2u);
  for (const auto& p : parts)
    for (double v : p.vector())
      EXPECT_EQ(v, 0.0);
  const auto [b, e] = W->sub(1)->dofmap().range();
  for (auto i = b; i < e; ++i)
    w.vector()[i] = 1.0;
  parts = w.split();
  for (double v : parts[0].vector())
    EXPECT_EQ(v, 0.0);
  for (double v : parts[1].vector())
    EXPECT_EQ(v, 1.0);
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> U(-1, 1);
  for (auto& v : w.vector())
    v = U(rng);
  Function back(W);
  back.assign_components(w.split());
  EXPECT_EQ(back.vector(), w.vector());

  auto V = FunctionSpace::create(square(2), "CG", 1);
  try
  {
    Function(V).split();
    FAIL();
  }
  catch (const Error& err)
  {
    EXPECT_EQ(err.kind(), ErrorKind::NotMixed);
  }
}
