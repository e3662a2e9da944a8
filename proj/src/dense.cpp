// Copyright (c) 2026 femkit contributors
// SPDX-License-Identifier:    MIT

#include <femkit/dense.h>
#include <femkit/error.h>

#include <algorithm>
#include <cmath>

using namespace femkit;

//-----------------------------------------------------------------------------
dense::LU::LU(std::vector<double> A, std::size_t n)
    : _n(n), _lu(std::move(A)), _perm(n)
{
  double maxabs = 0.0;
  for (double a : _lu)
    maxabs = std::max(maxabs, std::abs(a));
  const double tol = 1e-14 * maxabs;

  for (std::size_t i = 0; i < n; ++i)
    _perm[i] = i;

  for (std::size_t k = 0; k < n; ++k)
  {
    std::size_t p = k;
    double best = std::abs(_lu[k * n + k]);
    for (std::size_t i = k + 1; i < n; ++i)
    {
      const double v = std::abs(_lu[i * n + k]);
      if (v > best)
      {
        best = v;
        p = i;
      }
    }
    if (!(best > tol))
    {
      throw Error(ErrorKind::SingularMatrix,
                  "zero pivot in column " + std::to_string(k));
    }
    if (p != k)
    {
      std::swap_ranges(_lu.begin() + k * n, _lu.begin() + (k + 1) * n,
                       _lu.begin() + p * n);
      std::swap(_perm[k], _perm[p]);
    }
    const double inv = 1.0 / _lu[k * n + k];
    for (std::size_t i = k + 1; i < n; ++i)
    {
      double& lik = _lu[i * n + k];
      if (lik == 0.0)
        continue;
      lik *= inv;
      const double* rk = _lu.data() + k * n;
      double* ri = _lu.data() + i * n;
      for (std::size_t j = k + 1; j < n; ++j)
        ri[j] -= lik * rk[j];
    }
  }
}
//-----------------------------------------------------------------------------
void dense::LU::solve(std::span<double> b) const
{
  const std::size_t n = _n;
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i)
    y[i] = b[_perm[i]];
  for (std::size_t i = 0; i < n; ++i)
  {
    double s = y[i];
    for (std::size_t j = 0; j < i; ++j)
      s -= _lu[i * n + j] * y[j];
    y[i] = s;
  }
  for (std::size_t i = n; i-- > 0;)
  {
    double s = y[i];
    for (std::size_t j = i + 1; j < n; ++j)
      s -= _lu[i * n + j] * y[j];
    y[i] = s / _lu[i * n + i];
  }
  std::copy(y.begin(), y.end(), b.begin());
}
//-----------------------------------------------------------------------------
void dense::LU::solve_transpose(std::span<double> b) const
{
  // P A = L U, so A^T = U^T L^T P
  const std::size_t n = _n;
  std::vector<double> y(b.begin(), b.end());
  for (std::size_t i = 0; i < n; ++i)
  {
    double s = y[i];
    for (std::size_t j = 0; j < i; ++j)
      s -= _lu[j * n + i] * y[j];
    y[i] = s / _lu[i * n + i];
  }
  for (std::size_t i = n; i-- > 0;)
  {
    double s = y[i];
    for (std::size_t j = i + 1; j < n; ++j)
      s -= _lu[j * n + i] * y[j];
    y[i] = s;
  }
  for (std::size_t i = 0; i < n; ++i)
    b[_perm[i]] = y[i];
}
//-----------------------------------------------------------------------------
std::vector<double> dense::inverse(const std::vector<double>& A, std::size_t n)
{
  LU lu(A, n);
  std::vector<double> inv(n * n);
  std::vector<double> col(n);
  for (std::size_t j = 0; j < n; ++j)
  {
    std::fill(col.begin(), col.end(), 0.0);
    col[j] = 1.0;
    lu.solve(col);
    for (std::size_t i = 0; i < n; ++i)
      inv[i * n + j] = col[i];
  }
  return inv;
}
//-----------------------------------------------------------------------------
