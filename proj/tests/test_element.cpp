#include <femkit/element.h>
#include <femkit/error.h>
#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace femkit;
using cell::Type;

namespace
{
ElementDescriptor cg(Type c, int q)
{
  return ElementDescriptor::scalar(Family::CG, c, q);
}
ElementDescriptor dg(Type c, int q)
{
  return ElementDescriptor::scalar(Family::DG, c, q);
}

std::vector<double> random_points(Type c, int n, unsigned seed)
{
  std::mt19937 gen(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const int tdim = cell::topological_dimension(c);
  std::vector<double> pts;
  while (static_cast<int>(pts.size()) < n * tdim)
  {
    std::vector<double> x(tdim);
    double s = 0;
    for (auto& v : x)
    {
      v = u(gen);
      s += v;
    }
    if (s <= 1.0)
      pts.insert(pts.end(), x.begin(), x.end());
  }
  return pts;
}

struct Poly
{
  int tdim;
  std::vector<std::array<int, 3>> powers;
  std::vector<double> coeffs;

  double operator()(const double* x) const
  {
    double s = 0;
    for (std::size_t i = 0; i < powers.size(); ++i)
    {
      double t = coeffs[i];
      for (int k = 0; k < tdim; ++k)
        t *= std::pow(x[k], powers[i][k]);
      s += t;
    }
    return s;
  }
};

Poly random_poly(int tdim, int q, unsigned seed)
{
  std::mt19937 gen(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Poly p{tdim, {}, {}};
  for (int a = 0; a <= q; ++a)
    for (int b = 0; b <= (tdim > 1 ? q - a : 0); ++b)
      for (int c = 0; c <= (tdim > 2 ? q - a - b : 0); ++c)
      {
        p.powers.push_back({a, b, c});
        p.coeffs.push_back(u(gen));
      }
  return p;
}

std::vector<ElementDescriptor> scalar_elements()
{
  std::vector<ElementDescriptor> out;
  for (auto c : {Type::interval, Type::triangle, Type::tetrahedron})
  {
    for (int q = 1; q <= 6; ++q)
      out.push_back(cg(c, q));
    for (int q = 0; q <= 4; ++q)
      out.push_back(dg(c, q));
    out.push_back(ElementDescriptor::scalar(Family::CR, c, 1));
  }
  return out;
}

long binomial(int n, int k)
{
  long r = 1;
  for (int i = 1; i <= k; ++i)
    r = r * (n - k + i) / i;
  return r;
}
} // namespace

TEST(Element, SpaceDimensions)
{
  FiniteElement p1(cg(Type::triangle, 1));
  EXPECT_EQ(p1.space_dim(), 3);
  const std::vector<double> verts = {0, 0, 1, 0, 0, 1};
  EXPECT_EQ(p1.dof_points(), verts);

  auto th = ElementDescriptor::mixed(
      {ElementDescriptor::vector(cg(Type::triangle, 2), 2), cg(Type::triangle, 1)});
  FiniteElement e(th);
  EXPECT_EQ(e.space_dim(), 15);
  EXPECT_EQ(e.value_size(), 3);

  for (int q = 1; q <= 6; ++q)
  {
    EXPECT_EQ(FiniteElement(cg(Type::tetrahedron, q)).space_dim(),
              binomial(q + 3, 3));
    EXPECT_EQ(FiniteElement(cg(Type::triangle, q)).space_dim(),
              binomial(q + 2, 2));
  }
}

TEST(Element, CentroidValues)
{
  FiniteElement p1(cg(Type::triangle, 1));
  const double c[2] = {1.0 / 3.0, 1.0 / 3.0};
  auto t = p1.tabulate(0, c);
  for (int i = 0; i < 3; ++i)
    EXPECT_NEAR(t(0, 0, i, 0), 1.0 / 3.0, 1e-15);
}

TEST(Element, QuadraticIntervalLayout)
{
  FiniteElement p2(cg(Type::interval, 2));
  EXPECT_EQ(p2.dof_points(), (std::vector<double>{0.0, 1.0, 0.5}));
  const double x = 0.0;
  auto t = p2.tabulate(0, std::span<const double>(&x, 1));
  EXPECT_NEAR(t(0, 0, 0, 0), 1.0, 1e-14);
  EXPECT_NEAR(t(0, 0, 1, 0), 0.0, 1e-14);
  EXPECT_NEAR(t(0, 0, 2, 0), 0.0, 1e-14);
}

TEST(Element, QuadraticTriangleLayout)
{
  FiniteElement p2(cg(Type::triangle, 2));
  ASSERT_EQ(p2.space_dim(), 6);
  const auto& ed = p2.entity_dofs();
  for (int v = 0; v < 3; ++v)
    EXPECT_EQ(ed[0][v], std::vector<int>{v});
  for (int e = 0; e < 3; ++e)
    EXPECT_EQ(ed[1][e], std::vector<int>{3 + e});
  // edge 0 joins vertices 1 and 2
  EXPECT_NEAR(p2.dof_points()[6], 0.5, 1e-15);
  EXPECT_NEAR(p2.dof_points()[7], 0.5, 1e-15);
}

TEST(Element, DiscontinuousLayout)
{
  FiniteElement d1(dg(Type::triangle, 1));
  EXPECT_TRUE(d1.discontinuous());
  EXPECT_EQ(d1.entity_dofs()[2][0], (std::vector<int>{0, 1, 2}));
  for (int v = 0; v < 3; ++v)
    EXPECT_TRUE(d1.entity_dofs()[0][v].empty());
  FiniteElement d0(dg(Type::tetrahedron, 0));
  EXPECT_EQ(d0.space_dim(), 1);
  EXPECT_NEAR(d0.dof_points()[0], 0.25, 1e-15);
}

TEST(Element, CrouzeixRaviartMidpoints)
{
  FiniteElement cr(ElementDescriptor::scalar(Family::CR, Type::triangle, 1));
  const std::vector<double> mid = {0.5, 0.5, 0.0, 0.5, 0.5, 0.0};
  EXPECT_EQ(cr.dof_points(), mid);
  for (int f = 0; f < 3; ++f)
    EXPECT_EQ(cr.entity_dofs()[1][f], std::vector<int>{f});
}

TEST(Element, EntityDofCounts)
{
  for (int q = 1; q <= 6; ++q)
  {
    FiniteElement e(cg(Type::tetrahedron, q));
    const auto& ed = e.entity_dofs();
    int total = 0;
    for (auto& v : ed[0])
      EXPECT_EQ(v.size(), 1u);
    for (auto& v : ed[1])
      EXPECT_EQ(static_cast<int>(v.size()), q - 1);
    for (auto& v : ed[2])
      EXPECT_EQ(static_cast<int>(v.size()), (q - 1) * (q - 2) / 2);
    EXPECT_EQ(static_cast<int>(ed[3][0].size()), (q - 1) * (q - 2) * (q - 3) / 6);
    for (auto& dim : ed)
      for (auto& v : dim)
        total += static_cast<int>(v.size());
    EXPECT_EQ(total, e.space_dim());
  }
}

TEST(Element, Nodality)
{
  for (const auto& d : scalar_elements())
  {
    FiniteElement e(d);
    auto t = e.tabulate(0, e.dof_points());
    for (int i = 0; i < e.space_dim(); ++i)
      for (int j = 0; j < e.space_dim(); ++j)
        EXPECT_NEAR(t(0, i, j, 0), i == j ? 1.0 : 0.0, 1e-12) << d.str();
  }
}

TEST(Element, PartitionOfUnity)
{
  for (const auto& d : scalar_elements())
  {
    if (d.family == Family::CR)
      continue;
    FiniteElement e(d);
    const auto pts = random_points(d.cell, 100, 11);
    auto t = e.tabulate(1, pts);
    for (std::size_t p = 0; p < t.npoints; ++p)
    {
      for (int k = 0; k < t.nderiv; ++k)
      {
        double s = 0;
        for (int i = 0; i < e.space_dim(); ++i)
          s += t(k, p, i, 0);
        EXPECT_NEAR(s, k == 0 ? 1.0 : 0.0, 1e-12) << d.str();
      }
    }
  }
}

TEST(Element, QuadraticTriangleGradientsSumToZero)
{
  FiniteElement e(cg(Type::triangle, 2));
  const double x[2] = {0.21, 0.37};
  auto t = e.tabulate(1, x);
  for (int k = 1; k <= 2; ++k)
  {
    double s = 0;
    for (int i = 0; i < 6; ++i)
      s += t(k, 0, i, 0);
    EXPECT_NEAR(s, 0.0, 1e-13);
  }
}

TEST(Element, DegreeReproduction)
{
  for (const auto& d : scalar_elements())
  {
    FiniteElement e(d);
    const int tdim = e.tdim();
    const auto p = random_poly(tdim, d.degree, 5);
    std::vector<double> c(e.space_dim());
    for (int i = 0; i < e.space_dim(); ++i)
      c[i] = p(e.dof_points().data() + i * tdim);
    const auto pts = random_points(d.cell, 30, 17);
    auto t = e.tabulate(0, pts);
    for (std::size_t q = 0; q < t.npoints; ++q)
    {
      double v = 0;
      for (int i = 0; i < e.space_dim(); ++i)
        v += c[i] * t(0, q, i, 0);
      EXPECT_NEAR(v, p(pts.data() + q * tdim), 1e-10) << d.str();
    }
  }
}

TEST(Element, GradientMatchesFiniteDifference)
{
  FiniteElement e(cg(Type::tetrahedron, 3));
  const double x[3] = {0.2, 0.3, 0.1};
  auto t = e.tabulate(1, x);
  const double h = 1e-6;
  for (int k = 0; k < 3; ++k)
  {
    double xp[3] = {x[0], x[1], x[2]}, xm[3] = {x[0], x[1], x[2]};
    xp[k] += h;
    xm[k] -= h;
    auto tp = e.tabulate(0, xp);
    auto tm = e.tabulate(0, xm);
    for (int i = 0; i < e.space_dim(); ++i)
      EXPECT_NEAR(t(1 + k, 0, i, 0), (tp(0, 0, i, 0) - tm(0, 0, i, 0)) / (2 * h),
                  1e-7);
  }
}

TEST(Element, MixedBlockStructure)
{
  auto v = ElementDescriptor::vector(cg(Type::triangle, 2), 2);
  auto th = ElementDescriptor::mixed({v, cg(Type::triangle, 1)});
  FiniteElement e(th);
  FiniteElement p2(cg(Type::triangle, 2));
  FiniteElement p1(cg(Type::triangle, 1));
  const auto pts = random_points(Type::triangle, 7, 3);
  auto t = e.tabulate(1, pts);
  auto t2 = p2.tabulate(1, pts);
  auto t1 = p1.tabulate(1, pts);
  for (int d = 0; d < 3; ++d)
    for (std::size_t p = 0; p < t.npoints; ++p)
      for (int i = 0; i < 15; ++i)
        for (int c = 0; c < 3; ++c)
        {
          double expect = 0.0;
          if (i < 6 and c == 0)
            expect = t2(d, p, i, 0);
          else if (i >= 6 and i < 12 and c == 1)
            expect = t2(d, p, i - 6, 0);
          else if (i >= 12 and c == 2)
            expect = t1(d, p, i - 12, 0);
          EXPECT_EQ(t(d, p, i, c), expect);
        }
  EXPECT_EQ(e.sub_dof_offset(1), 12);
  EXPECT_EQ(e.sub_value_offset(1), 2);
  EXPECT_EQ(e.dof_components()[7], 1);
  EXPECT_EQ(e.dof_components()[13], 2);
  EXPECT_EQ(e.entity_dofs()[0][0], (std::vector<int>{0, 6, 12}));
  EXPECT_EQ(e.degree(), 2);
}

TEST(Element, Errors)
{
  auto expect_kind = [](auto f, ErrorKind k)
  {
    try
    {
      f();
      FAIL();
    }
    catch (const Error& e)
    {
      EXPECT_EQ(e.kind(), k);
    }
  };
  expect_kind([] { FiniteElement e(cg(Type::triangle, 0)); }, ErrorKind::BadDegree);
  expect_kind(
      [] { FiniteElement e(ElementDescriptor::scalar(Family::CR, Type::triangle, 2)); },
      ErrorKind::BadDegree);
  expect_kind([] { family_from_string("RT"); }, ErrorKind::UnsupportedFamily);
  expect_kind(
      []
      {
        FiniteElement e(cg(Type::triangle, 1));
        const double x[2] = {0.8, 0.3};
        e.tabulate(0, x);
      },
      ErrorKind::PointOutsideReference);
}

TEST(Element, DescriptorText)
{
  auto th = ElementDescriptor::mixed(
      {ElementDescriptor::vector(cg(Type::triangle, 2), 2), cg(Type::triangle, 1)});
  EXPECT_EQ(th.str(), "Mixed(Vector(CG2,2),CG1)@triangle");
  EXPECT_EQ(family_from_string("Lagrange"), Family::CG);
}
