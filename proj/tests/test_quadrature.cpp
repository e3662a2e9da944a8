#include <femkit/error.h>
#include <femkit/quadrature.h>
#include <gtest/gtest.h>

#include <cmath>

using namespace femkit;

namespace
{
double factorial(int n) { return n <= 1 ? 1.0 : n * factorial(n - 1); }

// Exact integral of x^a y^b z^c over the reference simplex of dimension d.
double monomial_integral(int d, int a, int b, int c)
{
  return factorial(a) * factorial(b) * factorial(c) / factorial(a + b + c + d);
}

double integrate(const quadrature::Rule& r, int a, int b, int c)
{
  double s = 0.0;
  for (std::size_t q = 0; q < r.size(); ++q)
  {
    const double* x = r.point(q);
    double v = std::pow(x[0], a);
    if (r.tdim > 1)
      v *= std::pow(x[1], b);
    if (r.tdim > 2)
      v *= std::pow(x[2], c);
    s += r.weights[q] * v;
  }
  return s;
}
} // namespace

TEST(Quadrature, TriangleDegreeOneLinear)
{
  auto r = quadrature::make_rule(cell::Type::triangle, 1);
  EXPECT_NEAR(integrate(r, 1, 0, 0), 1.0 / 6.0, 1e-16);
}

TEST(Quadrature, IntervalDegreeThreeHasTwoPoints)
{
  auto r = quadrature::make_rule(cell::Type::interval, 3);
  EXPECT_EQ(r.size(), 2u);
  EXPECT_NEAR(integrate(r, 3, 0, 0), 0.25, 1e-15);
}

TEST(Quadrature, IntervalPointCount)
{
  for (int d = 1; d <= 20; ++d)
  {
    auto r = quadrature::make_rule(cell::Type::interval, d);
    EXPECT_EQ(r.size(), static_cast<std::size_t>((d + 2) / 2));
  }
}

TEST(Quadrature, WeightsSumToReferenceVolume)
{
  for (int d = 1; d <= 20; ++d)
  {
    for (auto [type, vol] : {std::pair{cell::Type::interval, 1.0},
                             std::pair{cell::Type::triangle, 0.5},
                             std::pair{cell::Type::tetrahedron, 1.0 / 6.0}})
    {
      auto r = quadrature::make_rule(type, d);
      double s = 0.0;
      for (double w : r.weights)
      {
        EXPECT_GT(w, 0.0);
        s += w;
      }
      EXPECT_NEAR(s, vol, 1e-15);
    }
  }
}

TEST(Quadrature, PointsInsideReference)
{
  for (int d = 1; d <= 20; d += 3)
  {
    auto r = quadrature::make_rule(cell::Type::tetrahedron, d);
    for (std::size_t q = 0; q < r.size(); ++q)
    {
      const double* x = r.point(q);
      EXPECT_GT(x[0], 0.0);
      EXPECT_GT(x[1], 0.0);
      EXPECT_GT(x[2], 0.0);
      EXPECT_LT(x[0] + x[1] + x[2], 1.0);
    }
  }
}

TEST(Quadrature, MonomialExactness)
{
  for (int deg = 1; deg <= 10; ++deg)
  {
    for (int tdim = 1; tdim <= 3; ++tdim)
    {
      auto r = quadrature::make_rule(cell::simplex(tdim), deg);
      for (int a = 0; a <= deg; ++a)
        for (int b = 0; b <= (tdim > 1 ? deg - a : 0); ++b)
          for (int c = 0; c <= (tdim > 2 ? deg - a - b : 0); ++c)
          {
            const double exact = monomial_integral(tdim, a, b, c);
            EXPECT_NEAR(integrate(r, a, b, c), exact, 1e-14 * exact)
                << "tdim " << tdim << " deg " << deg << " (" << a << "," << b
                << "," << c << ")";
          }
    }
  }
}

TEST(Quadrature, DegreeOutOfRange)
{
  for (int d : {0, 21, -3})
  {
    try
    {
      quadrature::make_rule(cell::Type::triangle, d);
      FAIL();
    }
    catch (const Error& e)
    {
      EXPECT_EQ(e.kind(), ErrorKind::DegreeOutOfRange);
    }
  }
}

TEST(Quadrature, GaussJacobiWeightedMoments)
{
  // int_{-1}^{1} (1-x)^a x^k dx for a = 2, k <= 2m-1
  std::vector<double> x, w;
  quadrature::gauss_jacobi(4, 2, x, w);
  auto exact = [](int k)
  {
    // expand (1-x)^2 x^k and integrate term by term
    auto m = [](int j) { return j % 2 ? 0.0 : 2.0 / (j + 1); };
    return m(k) - 2 * m(k + 1) + m(k + 2);
  };
  for (int k = 0; k <= 7; ++k)
  {
    double s = 0;
    for (int i = 0; i < 4; ++i)
      s += w[i] * std::pow(x[i], k);
    EXPECT_NEAR(s, exact(k), 1e-14);
  }
}
