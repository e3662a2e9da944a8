// Copyright (c) 2026 femkit contributors
// SPDX-License-Identifier:    MIT

#pragma once

#include "cell.h"
#include <vector>

namespace femkit::quadrature
{

/// Quadrature rule on a reference cell. Points are stored flat with tdim
/// coordinates each; weights sum to the reference volume.
struct Rule
{
  int tdim = 0;
  int degree = 0;
  std::vector<double> points;
  std::vector<double> weights;

  std::size_t size() const { return weights.size(); }
  const double* point(std::size_t q) const { return points.data() + q * tdim; }
};

/// Gauss-Jacobi points and weights on [-1, 1] for the weight (1 - x)^a.
void gauss_jacobi(int m, int a, std::vector<double>& x, std::vector<double>& w);

/// Rule exact for polynomials of total degree <= degree (1..20).
/// Intervals use Gauss-Legendre, triangles and tetrahedra use collapsed
/// Gauss-Jacobi products. A point "cell" (tdim 0) has one point with
/// weight 1.
Rule make_rule(cell::Type cell, int degree);

/// Single point rule for a vertex facet.
Rule point_rule();

/// Rule on the reference simplex of dimension tdim (0..3).
Rule make_rule(int tdim, int degree);

} // namespace femkit::quadrature
