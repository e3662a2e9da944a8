// Copyright (c) 2026 femkit contributors
// SPDX-License-Identifier:    MIT

#include <femkit/error.h>
#include <femkit/quadrature.h>

#include <cmath>
#include <numbers>

using namespace femkit;

namespace
{
// Jacobi polynomial P_n^(a,b)(x)
double jacobi(int n, double a, double b, double x)
{
  if (n == 0)
    return 1.0;
  double p0 = 1.0;
  double p1 = 0.5 * (a - b + (a + b + 2.0) * x);
  for (int k = 2; k <= n; ++k)
  {
    const double s = 2.0 * k + a + b;
    const double c1 = 2.0 * k * (k + a + b) * (s - 2.0);
    const double c2 = (s - 1.0) * (s * (s - 2.0) * x + a * a - b * b);
    const double c3 = 2.0 * (k + a - 1.0) * (k + b - 1.0) * s;
    const double p2 = (c2 * p1 - c3 * p0) / c1;
    p0 = p1;
    p1 = p2;
  }
  return p1;
}

double jacobi_derivative(int n, double a, double b, double x)
{
  if (n == 0)
    return 0.0;
  return 0.5 * (n + a + b + 1.0) * jacobi(n - 1, a + 1.0, b + 1.0, x);
}
} // namespace

//-----------------------------------------------------------------------------
void quadrature::gauss_jacobi(int m, int a, std::vector<double>& x,
                              std::vector<double>& w)
{
  x.assign(m, 0.0);
  w.assign(m, 0.0);

  // Newton with deflation against the roots already found
  for (int k = 0; k < m; ++k)
  {
    double r = -std::cos((2.0 * k + 1.0) * std::numbers::pi / (2.0 * m));
    if (k > 0)
      r = 0.5 * (r + x[k - 1]);
    for (int it = 0; it < 100; ++it)
    {
      double s = 0.0;
      for (int j = 0; j < k; ++j)
        s += 1.0 / (r - x[j]);
      const double f = jacobi(m, a, 0.0, r);
      const double df = jacobi_derivative(m, a, 0.0, r);
      const double delta = f / (df - s * f);
      r -= delta;
      if (std::abs(delta) < 1e-16)
        break;
    }
    x[k] = r;
  }

  for (int k = 0; k < m; ++k)
  {
    const double d = jacobi_derivative(m, a, 0.0, x[k]);
    w[k] = std::pow(2.0, a + 1) / ((1.0 - x[k] * x[k]) * d * d);
  }
}
//-----------------------------------------------------------------------------
quadrature::Rule quadrature::point_rule()
{
  Rule rule;
  rule.tdim = 0;
  rule.degree = 20;
  rule.weights = {1.0};
  return rule;
}
//-----------------------------------------------------------------------------
quadrature::Rule quadrature::make_rule(int tdim, int degree)
{
  if (tdim == 0)
    return point_rule();
  return make_rule(cell::simplex(tdim), degree);
}
//-----------------------------------------------------------------------------
quadrature::Rule quadrature::make_rule(cell::Type type, int degree)
{
  if (degree < 1 or degree > 20)
  {
    throw Error(ErrorKind::DegreeOutOfRange,
                "quadrature degree " + std::to_string(degree));
  }

  const int m = (degree + 2) / 2;
  Rule rule;
  rule.degree = degree;
  rule.tdim = cell::topological_dimension(type);

  std::vector<double> x0, w0, x1, w1, x2, w2;
  gauss_jacobi(m, 0, x0, w0);

  switch (type)
  {
  case cell::Type::interval:
    for (int i = 0; i < m; ++i)
    {
      rule.points.push_back(0.5 * (1.0 + x0[i]));
      rule.weights.push_back(0.5 * w0[i]);
    }
    break;
  case cell::Type::triangle:
    gauss_jacobi(m, 1, x1, w1);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < m; ++j)
      {
        rule.points.push_back(0.25 * (1.0 + x0[i]) * (1.0 - x1[j]));
        rule.points.push_back(0.5 * (1.0 + x1[j]));
        rule.weights.push_back(0.125 * w0[i] * w1[j]);
      }
    break;
  case cell::Type::tetrahedron:
    gauss_jacobi(m, 1, x1, w1);
    gauss_jacobi(m, 2, x2, w2);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < m; ++j)
        for (int k = 0; k < m; ++k)
        {
          rule.points.push_back(0.125 * (1.0 + x0[i]) * (1.0 - x1[j])
                                * (1.0 - x2[k]));
          rule.points.push_back(0.25 * (1.0 + x1[j]) * (1.0 - x2[k]));
          rule.points.push_back(0.5 * (1.0 + x2[k]));
          rule.weights.push_back(0.015625 * w0[i] * w1[j] * w2[k]);
        }
    break;
  }
  return rule;
}
//-----------------------------------------------------------------------------
