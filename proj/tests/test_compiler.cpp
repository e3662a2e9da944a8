// Copyright (c) 2026 femkit contributors
// SPDX-License-Identifier:    MIT

#include "support/oracle.h"

#include <femkit/compiler.h>
#include <femkit/error.h>
#include <femkit/form_parser.h>
#include <gtest/gtest.h>

#include <filesystem>
#include <random>

using namespace femkit;
using namespace femkit::fl;

namespace
{
std::shared_ptr<const FiniteElement> element(Family f, int q,
                                             cell::Type c = cell::Type::triangle)
{
  return std::make_shared<FiniteElement>(ElementDescriptor::scalar(f, c, q));
}

const std::vector<double> ref_triangle{0, 0, 1, 0, 0, 1};

std::vector<double> tabulate(const CompiledForm& cf, const std::vector<double>& x,
                             std::size_t k = 0)
{
  std::vector<double> A(cf.kernels.at(k).size(), 0.0);
  TabulateArgs args;
  args.coordinates = x;
  cf.kernels[k].tabulate_tensor(A, args);
  return A;
}

Form stiffness(const std::shared_ptr<const FiniteElement>& V)
{
  auto v = argument(0, V), u = argument(1, V);
  return integrate(inner(grad(v), grad(u)), Measure::cell);
}

Form mass(const std::shared_ptr<const FiniteElement>& V)
{
  auto v = argument(0, V), u = argument(1, V);
  return integrate(product(v, u), Measure::cell);
}
} // namespace

TEST(Compiler, ReferenceStiffness)
{
  const auto cf = compile_form(stiffness(element(Family::CG, 1)));
  const auto A = tabulate(cf, ref_triangle);
  const double ref[9] = {1, -0.5, -0.5, -0.5, 0.5, 0, -0.5, 0, 0.5};
  for (int i = 0; i < 9; ++i)
    EXPECT_NEAR(A[i], ref[i], 1e-14);
}

TEST(Compiler, ReferenceMass)
{
  const auto cf = compile_form(mass(element(Family::CG, 1)));
  const auto A = tabulate(cf, ref_triangle);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      EXPECT_NEAR(A[i * 3 + j], (i == j ? 2.0 : 1.0) / 24.0, 1e-15);
}

TEST(Compiler, VolumeFunctional)
{
  std::mt19937 rng(3);
  for (int tdim = 1; tdim <= 3; ++tdim)
  {
    CompileOptions opt;
    opt.tdim = tdim;
    const auto cf = compile_form(integrate(constant(1.0), Measure::cell), opt);
    ASSERT_EQ(cf.rank, 0);
    const auto x = oracle::random_cell(cell::simplex(tdim), tdim, rng);
    const auto g = cell_geometry(x, tdim, tdim);
    EXPECT_NEAR(tabulate(cf, x)[0], g.volume, 1e-14);
  }
}

TEST(Compiler, ScalingAndTranslation)
{
  const auto V = element(Family::CG, 2);
  const auto M = compile_form(mass(V));
  const auto K = compile_form(stiffness(V));
  const std::vector<double> x{0.1, 0.2, 0.9, 0.3, 0.4, 1.1};
  // scale by sqrt(2): area doubles
  std::vector<double> xs(x), xt(x);
  for (auto& v : xs)
    v *= std::sqrt(2.0);
  for (std::size_t i = 0; i < xt.size(); ++i)
    xt[i] += i % 2 ? -3.5 : 7.25;
  const auto A = tabulate(M, x), As = tabulate(M, xs);
  for (std::size_t i = 0; i < A.size(); ++i)
    EXPECT_NEAR(As[i], 2.0 * A[i], 1e-13);
  const auto S = tabulate(K, x), St = tabulate(K, xt);
  for (std::size_t i = 0; i < S.size(); ++i)
    EXPECT_NEAR(St[i], S[i], 1e-12);
}

TEST(Compiler, DegenerateCell)
{
  const auto cf = compile_form(mass(element(Family::CG, 1)));
  const std::vector<double> x{0, 0, 1, 1, 2, 2};
  try
  {
    tabulate(cf, x);
    FAIL();
  }
  catch (const Error& e)
  {
    EXPECT_EQ(e.kind(), ErrorKind::DegenerateCell);
  }
}

TEST(Compiler, RandomP2StiffnessOracle)
{
  std::mt19937 rng(11);
  for (auto ct : {cell::Type::interval, cell::Type::triangle, cell::Type::tetrahedron})
  {
    const auto form = stiffness(element(Family::CG, 2, ct));
    EXPECT_LT(oracle::compare(form, compile_form(form), rng, 20), 1e-12);
  }
}

TEST(Compiler, MergedKernelAndIr)
{
  const auto V = element(Family::CG, 1);
  const auto form = stiffness(V) + mass(V);
  const auto cf = compile_form(form);
  ASSERT_EQ(cf.kernels.size(), 1u);
  EXPECT_EQ(cf.kernels[0].kind, IntegralKind::cell);
  const std::string ir = to_ir(cf);
  EXPECT_NE(ir.find("\"schema\": \"femkit-kir-1\""), std::string::npos);
  EXPECT_EQ(ir, to_ir(compile_form(form)));
  const auto back = from_ir(ir);
  EXPECT_EQ(to_ir(back), ir);
  const auto code = pseudocode(cf);
  EXPECT_NE(code.find("for q in"), std::string::npos);
  EXPECT_NE(code.find("table T0"), std::string::npos);
}

TEST(Compiler, IrReloadBitIdentical)
{
  std::mt19937 rng(5);
  const auto V = element(Family::CG, 2);
  const auto cf = compile_form(mass(V));
  const auto back = from_ir(to_ir(cf));
  for (int t = 0; t < 10; ++t)
  {
    const auto x = oracle::random_cell(cell::Type::triangle, 2, rng);
    const auto A = tabulate(cf, x), B = tabulate(back, x);
    ASSERT_EQ(A.size(), B.size());
    for (std::size_t i = 0; i < A.size(); ++i)
      EXPECT_EQ(A[i], B[i]);
  }
}

TEST(Compiler, IrErrors)
{
  auto kind = [](const std::string& text)
  {
    try
    {
      from_ir(text);
    }
    catch (const Error& e)
    {
      return e.kind();
    }
    return ErrorKind::InvalidArgument;
  };
  EXPECT_EQ(kind("{\"schema\": \"femkit-kir-0\"}"), ErrorKind::SchemaMismatch);
  EXPECT_EQ(kind("{not json"), ErrorKind::ParseError);
  EXPECT_EQ(kind("{\"schema\": \"femkit-kir-1\", \"rank\": 1}"), ErrorKind::ParseError);
}

TEST(Compiler, FacetPermutations)
{
  EXPECT_EQ(Kernel::num_permutations(3), 6);
  const int p[3] = {2, 0, 1};
  EXPECT_EQ(Kernel::permutation_index(p), 4);
  // two reference-sized triangles sharing the edge (1,0)-(0,1)
  const std::vector<double> x{0, 0, 1, 0, 0, 1, 1, 1, 0, 1, 1, 0};
  // '+' facet 0 is (v1, v2) = ((1,0),(0,1)); '-' facet 0 is ((0,1),(1,0))
  EXPECT_EQ(Kernel::facet_permutation(x, cell::Type::triangle, 2, {0, 0}), 1);
}

TEST(Compiler, UnsupportedExpressions)
{
  const auto V = element(Family::CG, 2);
  auto v = argument(0, V);
  auto f = point_coefficient(0, "f", {}, 2, 2);
  auto kind = [](const Form& F)
  {
    try
    {
      compile_form(F);
    }
    catch (const Error& e)
    {
      return e.kind();
    }
    return ErrorKind::InvalidArgument;
  };
  EXPECT_EQ(kind(integrate(div(grad(v)), Measure::cell)), ErrorKind::UnsupportedExpression);
  EXPECT_EQ(kind(integrate(inner(grad(v), grad(f)), Measure::cell)),
            ErrorKind::UnsupportedExpression);
}

TEST(Compiler, FacetIntegrals)
{
  std::mt19937 rng(7);
  for (auto ct : {cell::Type::interval, cell::Type::triangle, cell::Type::tetrahedron})
  {
    const int d = cell::topological_dimension(ct);
    const auto V = element(Family::DG, 2, ct);
    auto v = argument(0, V), u = argument(1, V);
    auto n = facet_normal(d);
    auto a = integrate(product(v, u), Measure::exterior_facet)
             + integrate(inner(jump(v, n), jump(u, n)), Measure::interior_facet)
             + integrate(product(avg(dot(grad(v), n)), jump(u)), Measure::interior_facet);
    const auto cf = compile_form(a);
    EXPECT_EQ(cf.kernels.size(), 2u);
    EXPECT_LT(oracle::compare(a, cf, rng, 20), 1e-12);
  }
}

TEST(Compiler, ExteriorFacetLength)
{
  // sum over the 3 facets of 1*ds is the perimeter
  CompileOptions opt;
  opt.tdim = 2;
  const auto cf = compile_form(integrate(constant(1.0), Measure::exterior_facet), opt);
  double p = 0.0;
  for (int f = 0; f < 3; ++f)
  {
    double A = 0.0;
    TabulateArgs args;
    args.coordinates = ref_triangle;
    args.local_facet = {f, -1};
    cf.kernels[0].tabulate_tensor({&A, 1}, args);
    p += A;
  }
  EXPECT_NEAR(p, 2.0 + std::sqrt(2.0), 1e-14);
}

TEST(Compiler, DemoFormsMatchOracle)
{
  std::mt19937 rng(2026);
  const std::filesystem::path dir = std::filesystem::path(FEMKIT_SOURCE_DIR) / "demos";
  int count = 0;
  for (const auto& entry : std::filesystem::directory_iterator(dir))
  {
    if (entry.path().extension() != ".ufl")
      continue;
    const auto file = read_form_file(entry.path().string());
    for (const auto& [name, form] : file.forms)
    {
      SCOPED_TRACE(entry.path().filename().string() + ":" + name);
      bool full = true;
      try
      {
        check_arity(form);
      }
      catch (const Error&)
      {
        full = false;
      }
      if (!full)
        continue;
      const auto cf = compile_form(form);
      // point coefficients get quadratic stand-ins (their declared degree)
      // so both rules integrate exactly
      EXPECT_LT(oracle::compare(form, cf, rng, 20), 1e-12);
      ++count;
    }
  }
  EXPECT_GE(count, 12);
}
